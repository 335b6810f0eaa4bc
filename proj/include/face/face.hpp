#pragma once

#include "face/analysis.hpp"
#include "face/baselines.hpp"
#include "face/device_model.hpp"
#include "face/dram_buffer.hpp"
#include "face/engine.hpp"
#include "face/flash_cache.hpp"
#include "face/metadata.hpp"
#include "face/page.hpp"
#include "face/recovery.hpp"
#include "face/sim.hpp"
#include "face/storage.hpp"
#include "face/workload.hpp"

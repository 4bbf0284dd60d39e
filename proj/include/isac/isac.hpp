// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/baselines.hpp"
#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/harness.hpp"
#include "isac/io.hpp"
#include "isac/nn/data.hpp"
#include "isac/nn/hcl_net.hpp"
#include "isac/nn/loss.hpp"
#include "isac/nn/params.hpp"
#include "isac/nn/predict.hpp"
#include "isac/nn/tensor.hpp"
#include "isac/nn/train.hpp"
#include "isac/rng.hpp"
#include "isac/sensing.hpp"
#include "isac/sim_core.hpp"

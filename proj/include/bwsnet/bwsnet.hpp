#pragma once
// Umbrella header: the whole BWSNet toolkit.

#include "bwsnet/ablation.hpp"
#include "bwsnet/analysis.hpp"
#include "bwsnet/audio.hpp"
#include "bwsnet/autodiff.hpp"
#include "bwsnet/cli.hpp"
#include "bwsnet/config.hpp"
#include "bwsnet/core.hpp"
#include "bwsnet/io.hpp"
#include "bwsnet/losses.hpp"
#include "bwsnet/model.hpp"
#include "bwsnet/synth.hpp"
#include "bwsnet/trainer.hpp"
#include "bwsnet/trial.hpp"

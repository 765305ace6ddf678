#pragma once

#include "a3ctp/adam.hpp"
#include "a3ctp/bomber.hpp"
#include "a3ctp/bomber_agents.hpp"
#include "a3ctp/bomber_env.hpp"
#include "a3ctp/checkpoint.hpp"
#include "a3ctp/config.hpp"
#include "a3ctp/env.hpp"
#include "a3ctp/gradient_check.hpp"
#include "a3ctp/grid_goal.hpp"
#include "a3ctp/harness.hpp"
#include "a3ctp/losses.hpp"
#include "a3ctp/mlp.hpp"
#include "a3ctp/model.hpp"
#include "a3ctp/pole_balance.hpp"
#include "a3ctp/rng.hpp"
#include "a3ctp/tensor.hpp"
#include "a3ctp/trainer.hpp"

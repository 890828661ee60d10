#pragma once

#include "semidfl/orchestrator.hpp"

/// A full SemiDFL pipeline shrunk to run in well under a second.
inline semidfl::RunConfig small_semidfl_config() {
  semidfl::RunConfig cfg;
  cfg.dataset.n = 300;
  cfg.labeled_ratio = 0.05;
  cfg.hidden = {16};
  cfg.train.epochs = 5;
  cfg.diffusion.steps = 50;
  cfg.diffusion.hidden = {16};
  cfg.diffusion.iters = 3;
  cfg.diffusion.sample_steps = 5;
  cfg.rounds = 8;
  cfg.warmup_rounds = 3;
  cfg.gen_period_rounds = 2;
  cfg.gen_per_period = 40;
  cfg.val_size = 20;
  cfg.pl.tau = 0.6;
  cfg.seed = 3;
  return cfg;
}

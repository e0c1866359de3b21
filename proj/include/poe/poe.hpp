#pragma once

#include "poe/checkpoint.hpp"
#include "poe/common.hpp"
#include "poe/data.hpp"
#include "poe/finite_diff.hpp"
#include "poe/forge.hpp"
#include "poe/fusion.hpp"
#include "poe/graph.hpp"
#include "poe/jsonl.hpp"
#include "poe/meta_eval.hpp"
#include "poe/optim.hpp"
#include "poe/panel.hpp"
#include "poe/report.hpp"
#include "poe/rng.hpp"
#include "poe/tensor.hpp"
#include "poe/text.hpp"
#include "poe/trainer.hpp"
#include "poe/version.hpp"

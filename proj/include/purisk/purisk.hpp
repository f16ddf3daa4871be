#pragma once

// Umbrella header: decision rules, risk analysis, synthetic benchmarks,
// estimators and the evaluation harness for augmented positive-unlabeled
// prediction (the label indicator S is observed alongside the features at
// prediction time).

#include "purisk/estimators.hpp"
#include "purisk/eval.hpp"
#include "purisk/math.hpp"
#include "purisk/model.hpp"
#include "purisk/parallel.hpp"
#include "purisk/risk.hpp"
#include "purisk/rng.hpp"
#include "purisk/rules.hpp"
#include "purisk/synth.hpp"

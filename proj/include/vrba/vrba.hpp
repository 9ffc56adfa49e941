#pragma once

#include "vrba/ad/derivatives.hpp"
#include "vrba/ad/jet.hpp"
#include "vrba/ad/ops.hpp"
#include "vrba/ad/tape.hpp"
#include "vrba/adapt/anneal.hpp"
#include "vrba/adapt/loss.hpp"
#include "vrba/adapt/mode.hpp"
#include "vrba/adapt/multipliers.hpp"
#include "vrba/adapt/pmf.hpp"
#include "vrba/adapt/potential.hpp"
#include "vrba/adapt/resample.hpp"
#include "vrba/nn/ansatz.hpp"
#include "vrba/nn/checkpoint.hpp"
#include "vrba/nn/mlp.hpp"
#include "vrba/optim/adam.hpp"
#include "vrba/optim/global_weights.hpp"
#include "vrba/diag/metrics.hpp"
#include "vrba/diag/partition.hpp"
#include "vrba/diag/record.hpp"
#include "vrba/diag/stages.hpp"
#include "vrba/pinn/burgers_reference.hpp"
#include "vrba/pinn/problems.hpp"
#include "vrba/pinn/residuals.hpp"
#include "vrba/pinn/train.hpp"
#include "vrba/op/dataset.hpp"
#include "vrba/op/deeponet.hpp"
#include "vrba/op/train.hpp"
#include "vrba/op/weights.hpp"
#include "vrba/varlab/functionals.hpp"
#include "vrba/varlab/quadrature.hpp"
#include "vrba/varlab/verify.hpp"
#include "vrba/cli/config.hpp"
#include "vrba/cli/report.hpp"
#include "vrba/cli/run.hpp"

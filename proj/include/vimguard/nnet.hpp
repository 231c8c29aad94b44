#pragma once

#include "vimguard/nnet/graph.hpp"
#include "vimguard/nnet/optim.hpp"
#include "vimguard/nnet/tape.hpp"
#include "vimguard/nnet/tensor.hpp"

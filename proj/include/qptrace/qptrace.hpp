#pragma once

#include "qptrace/eigensolver.hpp"
#include "qptrace/error.hpp"
#include "qptrace/index.hpp"
#include "qptrace/kernels.hpp"
#include "qptrace/measures.hpp"
#include "qptrace/random.hpp"
#include "qptrace/state.hpp"
#include "qptrace/state_file.hpp"

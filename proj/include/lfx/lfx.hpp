#pragma once

#include "lfx/core.hpp"
#include "lfx/diagnostics.hpp"
#include "lfx/experiments.hpp"
#include "lfx/extension.hpp"
#include "lfx/io.hpp"
#include "lfx/label_model.hpp"
#include "lfx/parallel.hpp"
#include "lfx/random.hpp"

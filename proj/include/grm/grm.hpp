#pragma once

#include "grm/analysis.hpp"
#include "grm/errors.hpp"
#include "grm/google_matrix.hpp"
#include "grm/graph.hpp"
#include "grm/io.hpp"
#include "grm/parallel.hpp"
#include "grm/reduced_matrix.hpp"

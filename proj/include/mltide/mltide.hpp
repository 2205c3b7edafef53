#pragma once

#include "mltide/analysis.hpp"
#include "mltide/errors.hpp"
#include "mltide/experiment.hpp"
#include "mltide/fem.hpp"
#include "mltide/io.hpp"
#include "mltide/krylov.hpp"
#include "mltide/layers.hpp"
#include "mltide/mesh.hpp"
#include "mltide/precond.hpp"
#include "mltide/sparse/csr.hpp"
#include "mltide/sparse/dense.hpp"
#include "mltide/sparse/direct.hpp"
#include "mltide/sparse/ilu0.hpp"
#include "mltide/system.hpp"

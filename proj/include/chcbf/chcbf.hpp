#pragma once

#include "chcbf/errors.hpp"
#include "chcbf/spectral_basis.hpp"
#include "chcbf/transforms.hpp"
#include "chcbf/potentials.hpp"
#include "chcbf/operators.hpp"
#include "chcbf/noise.hpp"
#include "chcbf/model.hpp"
#include "chcbf/random_fields.hpp"
#include "chcbf/diagnostics.hpp"
#include "chcbf/stepper.hpp"

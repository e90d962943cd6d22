// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_DIRREG_HPP
#define DIRREG_DIRREG_HPP

#include "dirreg/composition.hpp"
#include "dirreg/data.hpp"
#include "dirreg/design.hpp"
#include "dirreg/diagnostics.hpp"
#include "dirreg/errors.hpp"
#include "dirreg/formula.hpp"
#include "dirreg/infer_hmc.hpp"
#include "dirreg/infer_ml.hpp"
#include "dirreg/likelihood.hpp"
#include "dirreg/model.hpp"
#include "dirreg/posterior.hpp"
#include "dirreg/rng.hpp"
#include "dirreg/run.hpp"
#include "dirreg/simulate.hpp"
#include "dirreg/special.hpp"
#include "dirreg/svg.hpp"

#endif  // DIRREG_DIRREG_HPP

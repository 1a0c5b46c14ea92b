#ifndef SUBRAD_SUBRAD_HPP
#define SUBRAD_SUBRAD_HPP

#include "subrad/config.hpp"
#include "subrad/csv.hpp"
#include "subrad/integrator.hpp"
#include "subrad/model.hpp"
#include "subrad/scenarios.hpp"
#include "subrad/schedule.hpp"

#endif  // SUBRAD_SUBRAD_HPP

#pragma once

#include "cldiv/core.hpp"
#include "cldiv/phi.hpp"
#include "cldiv/model.hpp"
#include "cldiv/sample_io.hpp"
#include "cldiv/divergence.hpp"
#include "cldiv/estimation.hpp"
#include "cldiv/weighted_chisq.hpp"
#include "cldiv/asymptotics.hpp"
#include "cldiv/test_statistics.hpp"
#include "cldiv/normal4.hpp"
#include "cldiv/simulation.hpp"
#include "cldiv/registry.hpp"

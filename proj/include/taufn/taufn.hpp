#pragma once

#include "taufn/errors.hpp"
#include "taufn/grassmann.hpp"
#include "taufn/kacmoody.hpp"
#include "taufn/loops.hpp"
#include "taufn/rhfactor.hpp"
#include "taufn/runners.hpp"
#include "taufn/scenario.hpp"
#include "taufn/toeplitz.hpp"
#include "taufn/util.hpp"
#include "taufn/verify.hpp"
#include "taufn/version.hpp"

#pragma once

#include "tms/analog.hpp"
#include "tms/braille.hpp"
#include "tms/config.hpp"
#include "tms/cost.hpp"
#include "tms/crossbar.hpp"
#include "tms/devices.hpp"
#include "tms/errors.hpp"
#include "tms/io.hpp"
#include "tms/nodal.hpp"
#include "tms/pipeline.hpp"

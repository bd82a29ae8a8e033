#pragma once

#include "ampvbic/amp.hpp"
#include "ampvbic/config_file.hpp"
#include "ampvbic/decide.hpp"
#include "ampvbic/detector.hpp"
#include "ampvbic/harness.hpp"
#include "ampvbic/metrics.hpp"
#include "ampvbic/model.hpp"
#include "ampvbic/special.hpp"
#include "ampvbic/types.hpp"
#include "ampvbic/vbic.hpp"

#ifndef MLLP_MLLP_HPP
#define MLLP_MLLP_HPP

#include "mllp/common.hpp"
#include "mllp/crs.hpp"
#include "mllp/data.hpp"
#include "mllp/experiment.hpp"
#include "mllp/gates.hpp"
#include "mllp/logic_layers.hpp"
#include "mllp/metrics.hpp"
#include "mllp/model.hpp"
#include "mllp/serialize.hpp"
#include "mllp/train.hpp"

#endif

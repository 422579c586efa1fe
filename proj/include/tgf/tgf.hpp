#pragma once

#include "tgf/common.hpp"
#include "tgf/dataset.hpp"
#include "tgf/dsc.hpp"
#include "tgf/eval.hpp"
#include "tgf/features.hpp"
#include "tgf/forest.hpp"
#include "tgf/history.hpp"
#include "tgf/link.hpp"
#include "tgf/streamio.hpp"
#include "tgf/synth.hpp"

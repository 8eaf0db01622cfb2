#pragma once

#include "mvdisc/dataset.hpp"
#include "mvdisc/error.hpp"
#include "mvdisc/generator.hpp"
#include "mvdisc/graph.hpp"
#include "mvdisc/io.hpp"
#include "mvdisc/random.hpp"
#include "mvdisc/scoring.hpp"
#include "mvdisc/search.hpp"

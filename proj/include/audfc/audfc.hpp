#pragma once

#include "audfc/apriori.hpp"
#include "audfc/brute_force.hpp"
#include "audfc/copula.hpp"
#include "audfc/csv.hpp"
#include "audfc/dataset.hpp"
#include "audfc/eclat.hpp"
#include "audfc/error.hpp"
#include "audfc/estimator.hpp"
#include "audfc/ets.hpp"
#include "audfc/evaluation.hpp"
#include "audfc/fpgrowth.hpp"
#include "audfc/itemset.hpp"
#include "audfc/mine.hpp"
#include "audfc/mining.hpp"

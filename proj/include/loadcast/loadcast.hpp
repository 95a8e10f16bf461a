#pragma once

#include "loadcast/backtest.hpp"
#include "loadcast/baselines.hpp"
#include "loadcast/calendar.hpp"
#include "loadcast/cli.hpp"
#include "loadcast/covtest.hpp"
#include "loadcast/design.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/io.hpp"
#include "loadcast/lasso.hpp"
#include "loadcast/lasso_path.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/ols.hpp"
#include "loadcast/preprocess.hpp"
#include "loadcast/rng.hpp"
#include "loadcast/series.hpp"
#include "loadcast/synth.hpp"

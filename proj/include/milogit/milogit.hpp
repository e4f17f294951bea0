#pragma once

// Umbrella header: logistic regression with two blocks of discrete covariates
// missing at random.  Complete-case, full-ML, inverse-probability-weighted,
// and two multiple-imputation estimators with Rubin-type and sandwich
// variances, plus the Monte Carlo harness.

#include "milogit/csv.hpp"
#include "milogit/report.hpp"

#pragma once

#include "linmix/common.hpp"
#include "linmix/estimator.hpp"
#include "linmix/harness.hpp"
#include "linmix/io.hpp"
#include "linmix/optimizer.hpp"
#include "linmix/policy.hpp"
#include "linmix/process.hpp"

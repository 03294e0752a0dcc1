#pragma once

#include "fiberpair/analysis.hpp"
#include "fiberpair/config.hpp"
#include "fiberpair/csv.hpp"
#include "fiberpair/entanglement.hpp"
#include "fiberpair/errors.hpp"
#include "fiberpair/experiments.hpp"
#include "fiberpair/quantum_statistics.hpp"
#include "fiberpair/random.hpp"
#include "fiberpair/report.hpp"
#include "fiberpair/source_detector.hpp"

#pragma once

#include "nullmodel/error.hpp"
#include "nullmodel/graph.hpp"
#include "nullmodel/link.hpp"
#include "nullmodel/likelihood.hpp"
#include "nullmodel/estimation.hpp"
#include "nullmodel/brute_force.hpp"
#include "nullmodel/certificate.hpp"
#include "nullmodel/report.hpp"

#pragma once

#include <cgh/classicality.hpp>
#include <cgh/config.hpp>
#include <cgh/error.hpp>
#include <cgh/evolution.hpp>
#include <cgh/grid.hpp>
#include <cgh/hydro.hpp>
#include <cgh/io.hpp>
#include <cgh/madelung.hpp>
#include <cgh/projector.hpp>
#include <cgh/runner.hpp>

#pragma once

#include "qtraj/bloch.hpp"
#include "qtraj/config.hpp"
#include "qtraj/sme.hpp"
#include "qtraj/feedback.hpp"
#include "qtraj/trajectory.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/thermo.hpp"
#include "qtraj/oracle.hpp"
#include "qtraj/sweep.hpp"
#include "qtraj/io.hpp"
#include "qtraj/commands.hpp"

// qbattery.hpp: umbrella header

#pragma once

#include "qbattery/core.hpp"
#include "qbattery/io.hpp"
#include "qbattery/lindblad.hpp"
#include "qbattery/metrics.hpp"
#include "qbattery/protocol.hpp"
#include "qbattery/spin_chain.hpp"
#include "qbattery/two_spin.hpp"
#include "qbattery/validate.hpp"

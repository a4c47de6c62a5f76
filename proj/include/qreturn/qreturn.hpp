#pragma once

// Umbrella header.

#include "qreturn/builders.hpp"
#include "qreturn/channel.hpp"
#include "qreturn/ensemble.hpp"
#include "qreturn/errors.hpp"
#include "qreturn/io.hpp"
#include "qreturn/numerics.hpp"
#include "qreturn/recurrence.hpp"
#include "qreturn/rng.hpp"

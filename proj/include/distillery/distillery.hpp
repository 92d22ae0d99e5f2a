#pragma once

#include "distillery/bell.hpp"
#include "distillery/bitstring.hpp"
#include "distillery/config.hpp"
#include "distillery/error.hpp"
#include "distillery/hashing.hpp"
#include "distillery/json_io.hpp"
#include "distillery/locc.hpp"
#include "distillery/qstate.hpp"
#include "distillery/random.hpp"
#include "distillery/recurrence.hpp"
#include "distillery/sampling.hpp"

#pragma once

// Umbrella header.

#include "msreg/config.hpp"
#include "msreg/descriptor.hpp"
#include "msreg/edges.hpp"
#include "msreg/error.hpp"
#include "msreg/eval.hpp"
#include "msreg/features.hpp"
#include "msreg/fusion.hpp"
#include "msreg/image.hpp"
#include "msreg/io.hpp"
#include "msreg/registration.hpp"
#include "msreg/transform.hpp"
#include "msreg/transform_io.hpp"
#include "msreg/warp.hpp"

#pragma once

#include "itprop/error.hpp"
#include "itprop/mesh.hpp"
#include "itprop/hamiltonian.hpp"
#include "itprop/deflate.hpp"
#include "itprop/propagation.hpp"
#include "itprop/jacobi.hpp"
#include "itprop/spherical_harmonics.hpp"
#include "itprop/spectrum.hpp"
#include "itprop/reference.hpp"
#include "itprop/job.hpp"

#include "addrhop/rng.hpp"

#include <cmath>

namespace addrhop {

double Rng::exponential(double mean) { return -mean * std::log1p(-uniform()); }

}  // namespace addrhop

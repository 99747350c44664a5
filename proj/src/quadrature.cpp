#include "steklov/quadrature.hpp"

namespace steklov {

template GaussRule<double> gauss_legendre<double>(int);
template GaussRule<long double> gauss_legendre<long double>(int);

}  // namespace steklov

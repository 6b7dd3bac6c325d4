#include "dualcube/tensor.hpp"

namespace dualcube {

template class Tensor<double>;
template class Tensor<float>;

}  // namespace dualcube

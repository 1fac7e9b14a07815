#include "rigidity/domain.hpp"

#include "rigidity/errors.hpp"

namespace rigidity {

namespace {
void require_dim(int d) {
    if (d < 1) throw Error(ErrorCode::ValidationError, "domain dimension must be >= 1");
}
}  // namespace

Domain Domain::euclidean(int d) {
    require_dim(d);
    return Domain{Kind::Euclidean, d};
}

Domain Domain::torus(int d) {
    require_dim(d);
    return Domain{Kind::Torus, d};
}

}  // namespace rigidity

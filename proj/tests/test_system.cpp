#include <catch2/catch_amalgamated.hpp>

#include <gramor/system.hpp>

using namespace gramor;

namespace {

StochasticLinearSystem example42() {
    StochasticLinearSystem sys;
    sys.A = Matrix{{0.0, -10.0}, {1.0, -10.0}};
    sys.B = Matrix{{0.0}, {10.0}};
    return sys;  // q = 0
}

}  // namespace

TEST_CASE("validate_system accepts the Example 4.2 system") {
    CHECK(validate_system(example42()).empty());
}

TEST_CASE("validate_system flags a B row-count mismatch") {
    auto sys = example42();
    sys.B = Matrix::Zero(3, 1);
    auto v = validate_system(sys);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("B has 3 rows") != std::string::npos);
}

TEST_CASE("validate_system names a non-finite entry") {
    auto sys = example42();
    sys.A(0, 1) = std::nan("");
    auto v = validate_system(sys);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("A(0,1)") != std::string::npos);
}

TEST_CASE("validate_system reports multiple violations at once") {
    StochasticLinearSystem sys;
    sys.A = Matrix::Zero(2, 3);
    sys.N = {Matrix::Zero(1, 1)};
    sys.B = Matrix::Zero(4, 1);
    CHECK(validate_system(sys).size() >= 2);
}

TEST_CASE("bilinear validation ties N count to input channels and gamma > 0") {
    BilinearControlSystem sys;
    sys.A = -Matrix::Identity(2, 2);
    sys.N = {Matrix::Zero(2, 2)};
    sys.B = Matrix::Zero(2, 2);  // two channels, one N
    sys.gamma = 0.0;
    auto v = validate_system(sys);
    CHECK(v.size() == 2);

    sys.N.push_back(Matrix::Zero(2, 2));
    sys.gamma = 2.0;
    CHECK(validate_system(sys).empty());
}

TEST_CASE("scaled_stochastic divides N and B by gamma") {
    BilinearControlSystem sys;
    sys.A = -Matrix::Identity(2, 2);
    sys.N = {Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2)};
    sys.B = Matrix::Ones(2, 2);
    sys.gamma = 4.0;
    auto s = scaled_stochastic(sys);
    CHECK((s.N[0] - Matrix::Identity(2, 2) / 4.0).norm() == 0.0);
    CHECK((s.B - Matrix::Ones(2, 2) / 4.0).norm() == 0.0);
    CHECK((s.A - sys.A).norm() == 0.0);
}

TEST_CASE("identity_rom reproduces the system matrices bit-exactly") {
    auto sys = example42();
    auto rom = identity_rom(sys);
    CHECK(rom.r() == 2);
    CHECK((rom.reducedA - sys.A).norm() == 0.0);
    CHECK((rom.reducedB - sys.B).norm() == 0.0);
}

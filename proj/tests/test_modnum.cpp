#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "carrylab/modnum.hpp"

using namespace carrylab;

namespace {

std::vector<int> values(const std::vector<Digit>& ds) {
  std::vector<int> out;
  for (const auto& d : ds) out.push_back(d.value());
  return out;
}

}  // namespace

TEST(Base, RejectsBelowTwo) {
  EXPECT_THROW(Base(1), domain_error);
  EXPECT_THROW(Base(0), domain_error);
  EXPECT_NO_THROW(Base(2));
}

TEST(Digit, RangeChecked) {
  const Base b(5);
  EXPECT_THROW(Digit(b, 5), domain_error);
  EXPECT_THROW(Digit(b, -1), domain_error);
  EXPECT_EQ(Digit(b, 4).value(), 4);
}

TEST(ModAdd, Examples) {
  const Base b3(3), b5(5);
  EXPECT_EQ(mod_add(b3, Digit(b3, 2), Digit(b3, 2)).value(), 1);
  EXPECT_EQ(mod_add(b5, Digit(b5, 4), Digit(b5, 3)).value(), 2);
  for (int x = 0; x < 5; ++x) EXPECT_EQ(mod_add(b5, Digit(b5, x), Digit(b5, 0)).value(), x);
}

TEST(ModAdd, CrossBaseRejected) {
  const Base b3(3), b4(4);
  EXPECT_THROW(mod_add(b3, Digit(b3, 1), Digit(b4, 1)), domain_error);
}

TEST(ModAdd, AssociativeAndCommutativeUpToEight) {
  for (int b = 2; b <= 8; ++b) {
    const Base base(b);
    for (int x = 0; x < b; ++x)
      for (int y = 0; y < b; ++y) {
        const Digit dx(base, x), dy(base, y);
        EXPECT_EQ(mod_add(base, dx, dy), mod_add(base, dy, dx));
        for (int z = 0; z < b; ++z) {
          const Digit dz(base, z);
          EXPECT_EQ(mod_add(base, mod_add(base, dx, dy), dz), mod_add(base, dx, mod_add(base, dy, dz)));
        }
      }
  }
}

TEST(Units, Examples) {
  EXPECT_EQ(values(units(Base(4))), (std::vector<int>{1, 3}));
  EXPECT_EQ(values(units(Base(5))), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(values(units(Base(3))), (std::vector<int>{1, 2}));
}

TEST(Units, MatchesIndependentGcdCount) {
  for (int b = 2; b <= 30; ++b) {
    int count = 0;
    for (int d = 1; d < b; ++d) {
      int x = d, y = b;
      while (y) {
        const int t = x % y;
        x = y;
        y = t;
      }
      if (x == 1) ++count;
    }
    EXPECT_EQ(euler_phi(Base(b)), count) << "b=" << b;
  }
}

TEST(EulerPhi, Examples) {
  EXPECT_EQ(euler_phi(Base(3)), 2);
  EXPECT_EQ(euler_phi(Base(4)), 2);
  EXPECT_EQ(euler_phi(Base(5)), 4);
}

TEST(InverseUnit, Inverts) {
  for (int b = 2; b <= 12; ++b) {
    const Base base(b);
    for (const auto& u : units(base)) EXPECT_EQ((u.value() * inverse_unit(base, u.value())) % b, 1 % b);
  }
  EXPECT_THROW(inverse_unit(Base(4), 2), domain_error);
}

TEST(Ordering, Examples) {
  const Base b3(3), b5(5);
  EXPECT_EQ(ordering_from_unit(b3, Digit(b3, 2)).sequence(), (std::vector<int>{0, 2, 1}));
  EXPECT_EQ(ordering_from_unit(b5, Digit(b5, 2)).sequence(), (std::vector<int>{0, 2, 4, 1, 3}));
  EXPECT_EQ(ordering_from_unit(b5, Digit(b5, 1)).sequence(), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Ordering, NonUnitRejected) {
  const Base b4(4);
  EXPECT_THROW(ordering_from_unit(b4, Digit(b4, 2)), domain_error);
  EXPECT_THROW(ordering_from_unit(b4, Digit(b4, 0)), domain_error);
}

TEST(Ordering, PermutationWithInversePositions) {
  for (int b = 2; b <= 12; ++b) {
    const Base base(b);
    for (const auto& u : units(base)) {
      const Ordering o = ordering_from_unit(base, u);
      const auto& seq = o.sequence();
      EXPECT_EQ(std::set<int>(seq.begin(), seq.end()).size(), static_cast<std::size_t>(b));
      EXPECT_EQ(seq[0], 0);
      if (b > 2 || u.value() == 1) EXPECT_EQ(seq[1], u.value());
      for (int i = 0; i < b; ++i) EXPECT_EQ(o.position(seq[static_cast<std::size_t>(i)]), i);
    }
  }
}

TEST(NondegenerateOrderings, Examples) {
  auto units_of = [](Base b) {
    std::vector<int> out;
    for (const auto& o : nondegenerate_orderings(b)) out.push_back(o.unit().value());
    return out;
  };
  EXPECT_EQ(units_of(Base(5)), (std::vector<int>{1, 2}));
  EXPECT_EQ(units_of(Base(3)), (std::vector<int>{1}));
  EXPECT_EQ(units_of(Base(4)), (std::vector<int>{1}));
  EXPECT_EQ(units_of(Base(7)), (std::vector<int>{1, 2, 3}));
}

TEST(NondegenerateOrderings, InversePairHasMirroredSequence) {
  // u and b-u visit Z_b in reverse cyclic order.
  const Base b(7);
  for (const auto& u : units(b)) {
    const auto s = ordering_from_unit(b, u).sequence();
    const auto t = ordering_from_unit(b, Digit(b, 7 - u.value())).sequence();
    for (int i = 1; i < 7; ++i) EXPECT_EQ(s[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(7 - i)]);
  }
}

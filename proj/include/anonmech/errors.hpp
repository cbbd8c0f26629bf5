#pragma once

#include <stdexcept>
#include <string>

namespace anonmech {

// Malformed or out-of-contract caller input.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An internal guarantee did not hold; indicates an arithmetic bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Observed bids have zero likelihood under every matching of bidders to priors.
class InconsistentEvidence : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace anonmech

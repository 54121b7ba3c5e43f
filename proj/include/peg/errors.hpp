#ifndef PEG_ERRORS_HPP
#define PEG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace peg {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// graph construction / algebra
class isolated_node_error : public error { public: using error::error; };
class length_mismatch_error : public error { public: using error::error; };
class too_large_error : public error { public: using error::error; };
class index_out_of_range_error : public error { public: using error::error; };

// spectral
class not_symmetric_error : public error { public: using error::error; };
class convergence_failure_error : public error { public: using error::error; };
class bad_dimension_error : public error { public: using error::error; };
class too_few_eigenvalues_error : public error { public: using error::error; };
class multiple_eigenvalues_error : public error { public: using error::error; };
class eps_too_large_error : public error { public: using error::error; };
class zero_eigengap_error : public error { public: using error::error; };

// tensors / model
class shape_mismatch_error : public error { public: using error::error; };
class unbounded_phi_error : public error { public: using error::error; };

// pipeline
class not_enough_edges_error : public error { public: using error::error; };
class negative_sampling_exhausted_error : public error { public: using error::error; };
class single_class_error : public error { public: using error::error; };
class too_few_negatives_error : public error { public: using error::error; };
class width_mismatch_error : public error { public: using error::error; };

// io
class parse_error : public error { public: using error::error; };
class feature_row_mismatch_error : public error { public: using error::error; };
class io_error : public error { public: using error::error; };

} // namespace peg

#endif // PEG_ERRORS_HPP

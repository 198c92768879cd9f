#include "ggtpc/wire.hpp"

#include "ggtpc/calibrate.hpp"
#include "ggtpc/promptmodel.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

namespace ggtpc::wire {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("wire: " + what);
}

class Writer {
public:
    explicit Writer(Bytes& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void doubles(const double* p, std::size_t count) { raw(p, 8 * count); }

private:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    Bytes& out_;
};

class Reader {
public:
    explicit Reader(const Bytes& in) : in_(in) {}

    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, 8);
        return v;
    }
    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }
    void doubles(double* p, std::size_t count) { raw(p, 8 * count); }
    bool exhausted() const { return pos_ == in_.size(); }

private:
    void raw(void* p, std::size_t n) {
        if (pos_ + n > in_.size()) fail("payload truncated");
        std::memcpy(p, in_.data() + pos_, n);
        pos_ += n;
    }
    const Bytes& in_;
    std::size_t pos_ = 0;
};

void check_tag(Reader& r) {
    const std::uint8_t tag = r.u8();
    if (tag != kFormatTag) fail("unsupported format tag " + std::to_string(int(tag)));
}

} // namespace

Bytes encode_triplet(int class_id, const fedstats::StatTriplet& triplet) {
    const int dim = static_cast<int>(triplet.mean.size());
    Bytes out;
    out.reserve(1 + 4 + 8 + 8u * static_cast<std::size_t>(dim) * (dim + 3) / 2);
    Writer w(out);
    w.u8(kFormatTag);
    w.u32(static_cast<std::uint32_t>(class_id));
    w.u64(triplet.n);
    w.doubles(triplet.mean.data(), static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) w.f64(triplet.cov(i, j));
    }
    return out;
}

std::pair<int, fedstats::StatTriplet> decode_triplet(const Bytes& payload, int dim) {
    Reader r(payload);
    check_tag(r);
    const int class_id = static_cast<int>(r.u32());
    fedstats::StatTriplet t;
    t.n = r.u64();
    t.mean.resize(dim);
    r.doubles(t.mean.data(), static_cast<std::size_t>(dim));
    t.cov.resize(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            const double v = r.f64();
            t.cov(i, j) = v;
            t.cov(j, i) = v;
        }
    }
    if (!r.exhausted()) fail("trailing bytes in triplet payload");
    return {class_id, std::move(t)};
}

Bytes encode_shape(const fedstats::GeometricShape& shape) {
    const int dim = shape.dim();
    Bytes out;
    out.reserve(1 + 4 + 8 + 8u * static_cast<std::size_t>(dim) * (dim + 2));
    Writer w(out);
    w.u8(kFormatTag);
    w.u32(static_cast<std::uint32_t>(shape.class_id));
    w.u64(shape.total_n);
    w.doubles(shape.mean.data(), static_cast<std::size_t>(dim));
    w.doubles(shape.eigenvalues.data(), static_cast<std::size_t>(dim));
    w.doubles(shape.eigenvectors.data(), static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
    return out;
}

fedstats::GeometricShape decode_shape(const Bytes& payload, int dim) {
    Reader r(payload);
    check_tag(r);
    fedstats::GeometricShape shape;
    shape.class_id = static_cast<int>(r.u32());
    shape.total_n = r.u64();
    shape.mean.resize(dim);
    r.doubles(shape.mean.data(), static_cast<std::size_t>(dim));
    shape.eigenvalues.resize(dim);
    r.doubles(shape.eigenvalues.data(), static_cast<std::size_t>(dim));
    shape.eigenvectors.resize(dim, dim); // column-major, matching Eigen storage
    r.doubles(shape.eigenvectors.data(),
              static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
    if (!r.exhausted()) fail("trailing bytes in shape payload");
    return shape;
}

Bytes encode_prototypes(const calibrate::PrototypeSet& prototypes, int dim) {
    Bytes out;
    Writer w(out);
    w.u8(kFormatTag);
    w.u32(static_cast<std::uint32_t>(prototypes.owner_domain));
    w.u32(static_cast<std::uint32_t>(prototypes.entries.size()));
    for (const auto& e : prototypes.entries) {
        if (e.prototype.size() != dim) fail("prototype dimension mismatch");
        w.u32(static_cast<std::uint32_t>(e.class_id));
        w.u32(static_cast<std::uint32_t>(e.domain_id));
        w.doubles(e.prototype.data(), static_cast<std::size_t>(dim));
    }
    return out;
}

calibrate::PrototypeSet decode_prototypes(const Bytes& payload, int dim) {
    Reader r(payload);
    check_tag(r);
    calibrate::PrototypeSet set;
    set.owner_domain = static_cast<int>(r.u32());
    const std::uint32_t count = r.u32();
    set.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        calibrate::PrototypeEntry e;
        e.class_id = static_cast<int>(r.u32());
        e.domain_id = static_cast<int>(r.u32());
        e.prototype.resize(dim);
        r.doubles(e.prototype.data(), static_cast<std::size_t>(dim));
        set.entries.push_back(std::move(e));
    }
    if (!r.exhausted()) fail("trailing bytes in prototype payload");
    return set;
}

Bytes encode_prompt_table(const promptmodel::PromptTable& table) {
    Bytes out;
    Writer w(out);
    w.u8(kFormatTag);
    w.u32(static_cast<std::uint32_t>(table.num_classes()));
    w.u32(static_cast<std::uint32_t>(table.dim()));
    w.f64(table.temperature);
    for (int c = 0; c < table.num_classes(); ++c) {
        for (int j = 0; j < table.dim(); ++j) w.f64(table.vectors(c, j));
    }
    return out;
}

promptmodel::PromptTable decode_prompt_table(const Bytes& payload) {
    Reader r(payload);
    check_tag(r);
    promptmodel::PromptTable table;
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    table.temperature = r.f64();
    table.vectors.resize(rows, cols);
    for (int c = 0; c < rows; ++c) {
        for (int j = 0; j < cols; ++j) table.vectors(c, j) = r.f64();
    }
    if (!r.exhausted()) fail("trailing bytes in prompt table payload");
    return table;
}

} // namespace ggtpc::wire

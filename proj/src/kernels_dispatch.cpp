#include "sharplab/kernels.hpp"

#include <cstdlib>
#include <string>

#include "sharplab/errors.hpp"

namespace sharplab::kernels {
namespace {

const Ops* resolve(const std::string& name) {
    if (name == "scalar") return &scalar_ops();
    if (name == "avx2") {
        const Ops* ops = avx2_ops();
        if (!ops) throw ArgumentError("kernels: avx2 requested but unavailable");
        return ops;
    }
    if (name == "auto") {
        if (const Ops* ops = avx2_ops()) return ops;
        return &scalar_ops();
    }
    throw ArgumentError("kernels: unknown variant '" + name + "'");
}

const Ops* initial() {
    if (const char* env = std::getenv("SHARPLAB_KERNELS")) return resolve(env);
    return resolve("auto");
}

const Ops*& current() {
    static const Ops* ops = initial();
    return ops;
}

}  // namespace

const Ops& active() { return *current(); }

void select(const char* name) { current() = resolve(name); }

}  // namespace sharplab::kernels

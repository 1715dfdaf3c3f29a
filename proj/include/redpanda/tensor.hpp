#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace redpanda::numerics {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

// Thread-local switch for graph recording. Eval-mode code (scoring, encoding
// banks) wraps itself in a NoGradGuard so no tape is built.
inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
    ~NoGradGuard() { grad_mode() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// One recorded operation (or leaf) in the reverse-mode graph. The graph is
// the DAG reachable from a loss node through `parents`; backward() derives a
// topological order and visits each node exactly once.
template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // sized lazily by backward()
    bool requires_grad = false;
    bool backward_done = false;  // set once a backward pass has consumed this root
    const char* op = "leaf";
    std::vector<std::shared_ptr<TensorNode<T>>> parents;
    // Reads this->grad, accumulates into parents' grads.
    std::function<void(TensorNode<T>&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
};

// Shared-handle tensor, PyTorch style: copies alias the same storage/node.
// Use clone() for a deep copy.
template <typename T>
class Tensor {
public:
    using Node = TensorNode<T>;

    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return filled(std::move(shape), T(0), requires_grad);
    }

    static Tensor filled(Shape shape, T fill, bool requires_grad = false) {
        Tensor t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->value.assign(shape_numel(t.node_->shape), fill);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false) {
        if (shape_numel(shape) != data.size())
            throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " does not match data length " +
                                        std::to_string(data.size()));
        Tensor t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->value = std::move(data);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(T v, bool requires_grad = false) {
        return from_data({1}, {v}, requires_grad);
    }

    // Records an op result. The node requires grad only when recording is
    // enabled and some parent requires grad; otherwise parents and the
    // backward rule are dropped and the result is a plain constant.
    static Tensor make_op(Shape shape, std::vector<T> value, std::vector<Tensor> parents, const char* op,
                          std::function<void(Node&)> backward_fn) {
        Tensor t = from_data(std::move(shape), std::move(value));
        t.node_->op = op;
        bool needs = false;
        if (grad_mode()) {
            for (const auto& p : parents)
                if (p.defined() && p.requires_grad()) { needs = true; break; }
        }
        if (needs) {
            t.node_->requires_grad = true;
            t.node_->parents.reserve(parents.size());
            for (auto& p : parents)
                if (p.defined()) t.node_->parents.push_back(p.node_);
            t.node_->backward_fn = std::move(backward_fn);
        }
        return t;
    }

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t numel() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }
    const char* op() const { return node_->op; }

    std::vector<T>& data() { return node_->value; }
    const std::vector<T>& data() const { return node_->value; }

    // Gradient of the most recent backward pass. Leaves that did not
    // participate report zeros.
    const std::vector<T>& grad() const {
        node_->ensure_grad();
        return node_->grad;
    }

    T item() const {
        if (numel() != 1) throw std::invalid_argument("Tensor::item: tensor has shape " + shape_str(shape()));
        return node_->value[0];
    }

    // Deep copy as a detached leaf.
    Tensor clone(bool requires_grad = false) const {
        return from_data(node_->shape, node_->value, requires_grad);
    }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// Reverse-mode sweep from a scalar loss. Gradients of every node in the
// reachable graph are freshly zeroed before accumulation, so each backward
// call yields exact gradients for its own graph. A second call on the same
// root throws rather than silently re-accumulating.
template <typename T>
void backward(const Tensor<T>& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward: undefined loss tensor");
    if (loss.numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    auto root = loss.node();
    if (!root->requires_grad)
        throw std::invalid_argument("backward: loss does not depend on any parameter requiring grad");
    if (root->backward_done)
        throw std::logic_error("backward: this graph was already consumed; rebuild the forward pass");
    root->backward_done = true;

    // Iterative post-order DFS over grad-requiring nodes.
    std::vector<TensorNode<T>*> order;
    std::unordered_set<TensorNode<T>*> seen;
    std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode<T>* p = node->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (auto* n : order) n->grad.assign(n->value.size(), T(0));
    root->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

}  // namespace redpanda::numerics

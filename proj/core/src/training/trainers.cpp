#include "trigan/training/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "trigan/autodiff/ops.hpp"

namespace trigan {

std::string_view trainer_name(TrainerKind kind) noexcept {
    switch (kind) {
        case TrainerKind::vanilla: return "vanilla";
        case TrainerKind::multitask_d: return "multitask";
        case TrainerKind::ecgan: return "ecgan";
        case TrainerKind::tri_gan: return "3ngan";
    }
    return "?";
}

std::string_view trainer_title(TrainerKind kind) noexcept {
    switch (kind) {
        case TrainerKind::vanilla: return "Vanilla Classifier";
        case TrainerKind::multitask_d: return "Multi-Tasking Discriminator";
        case TrainerKind::ecgan: return "EC-GAN";
        case TrainerKind::tri_gan: return "3N-GAN";
    }
    return "?";
}

TrainerKind parse_trainer(std::string_view text) {
    if (text == "vanilla") return TrainerKind::vanilla;
    if (text == "multitask" || text == "multitask_d") return TrainerKind::multitask_d;
    if (text == "ecgan") return TrainerKind::ecgan;
    if (text == "3ngan" || text == "tri_gan") return TrainerKind::tri_gan;
    throw std::invalid_argument("unknown trainer '" + std::string(text) +
                                "' (expected vanilla, multitask, ecgan or 3ngan)");
}

bool uses_generator(TrainerKind kind) noexcept { return kind != TrainerKind::vanilla; }

UpdateOrder parse_update_order(std::string_view text) {
    auto bad = [&] {
        return std::invalid_argument("update order must be a permutation of D, G and C, got '" + std::string(text) +
                                     "'");
    };
    if (text.size() != 3) throw bad();
    UpdateOrder order{};
    bool seen[3] = {false, false, false};
    for (std::size_t i = 0; i < 3; ++i) {
        Update u;
        switch (text[i]) {
            case 'D': case 'd': u = Update::discriminator; break;
            case 'G': case 'g': u = Update::generator; break;
            case 'C': case 'c': u = Update::classifier; break;
            default: throw bad();
        }
        if (seen[static_cast<int>(u)]) throw bad();
        seen[static_cast<int>(u)] = true;
        order[i] = u;
    }
    return order;
}

std::string update_order_string(const UpdateOrder& order) {
    std::string out;
    for (Update u : order) out += u == Update::discriminator ? 'D' : u == Update::generator ? 'G' : 'C';
    return out;
}

Tensor sample_latent(std::size_t batch, std::size_t latent_dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(batch * latent_dim);
    for (double& v : z) v = normal(rng);
    return Tensor::from({batch, latent_dim}, std::move(z));
}

namespace {

double mean_of(const Tensor& t) {
    double s = 0.0;
    for (double v : t.values()) s += v;
    return s / static_cast<double>(t.numel());
}

std::size_t argmax_row(std::span<const double> v, std::size_t row, std::size_t stride, std::size_t classes) {
    const double* p = v.data() + row * stride;
    return static_cast<std::size_t>(std::max_element(p, p + classes) - p);
}

double batch_accuracy(const Tensor& logits, std::span<const int> labels, std::size_t classes) {
    const std::size_t stride = logits.dim(1);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (argmax_row(logits.values(), r, stride, classes) == static_cast<std::size_t>(labels[r])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

void require_finite(const char* component, const char* what, double value) {
    if (!std::isfinite(value)) throw TrainingAborted(component, std::string(what) + " is " + std::to_string(value));
}

void backward_and_step(const char* component, Graph& g, const Tensor& loss, Player& player) {
    require_finite(component, "loss", loss.item());
    g.backward(loss);
    try {
        adam_step(player.net.parameters(), player.optimizer);
    } catch (const NonFiniteGradient& e) {
        throw TrainingAborted(component, e.what());
    }
}

void check_batch(const LabeledBatch& real) {
    if (real.size() == 0 || !real.images.defined() || real.images.dim(0) != real.size()) {
        throw std::invalid_argument("training step needs a non-empty batch with one label per image");
    }
}

StepMetrics adversarial_step(const LabeledBatch& real, Player& gen, Player& disc, Player& cls,
                             const LossWeights& weights, const StepOptions& options, Rng& latent_rng,
                             bool three_player) {
    check_batch(real);
    weights.validate();
    const std::size_t batch = real.size();

    // One fake batch per step, shared by all three updates.
    Graph gen_graph;
    gen.net.zero_grad();
    const Tensor z = sample_latent(batch, gen.net.spec().latent_dim, latent_rng);
    const Tensor fake = gen.net.forward(gen_graph, z, ForwardMode::train);
    const Tensor fake_const = fake.detached();

    StepMetrics m;
    for (Update u : options.order) {
        switch (u) {
            case Update::discriminator: {
                Graph g;
                disc.net.zero_grad();
                const Tensor d_real = disc.net.forward(g, real.images, ForwardMode::train);
                const Tensor d_fake = disc.net.forward(g, fake_const, ForwardMode::train_frozen_stats);
                const DiscriminatorLoss loss = discriminator_loss(g, d_real, d_fake);
                m.losses.l_d_real = loss.real_term;
                m.losses.l_d_fake = loss.fake_term;
                m.d_real_mean = mean_of(d_real);
                m.d_fake_mean = mean_of(d_fake);
                backward_and_step("discriminator", g, loss.loss, disc);
                break;
            }
            case Update::generator: {
                FreezeGuard freeze{&disc.net, &cls.net};
                const Tensor d_fake = disc.net.forward(gen_graph, fake, ForwardMode::train_frozen_stats);
                Tensor logits_g;
                if (three_player) logits_g = cls.net.forward(gen_graph, fake, ForwardMode::train_frozen_stats);
                const Objective obj = generator_objective(gen_graph, d_fake, logits_g, weights);
                m.losses.l_gen_adv = obj.report.l_gen_adv;
                m.losses.l_cu = obj.report.l_cu;
                m.losses.l_g_total = obj.report.l_g_total;
                backward_and_step("generator", gen_graph, obj.loss, gen);
                break;
            }
            case Update::classifier: {
                Graph g;
                cls.net.zero_grad();
                const Tensor logits = cls.net.forward(g, real.images, ForwardMode::train);
                const Tensor logits_g = cls.net.forward(g, fake_const, ForwardMode::train_frozen_stats);
                const Objective obj = classifier_objective(g, logits, real.labels, logits_g, weights,
                                                           options.kl_direction, {true, three_player});
                m.losses.l_s = obj.report.l_s;
                m.losses.l_u = obj.report.l_u;
                m.losses.l_kl = obj.report.l_kl;
                m.losses.l_c_total = obj.report.l_c_total;
                m.losses.accepted_fraction = obj.report.accepted_fraction;
                m.train_accuracy = batch_accuracy(logits, real.labels, logits.dim(1));
                backward_and_step("classifier", g, obj.loss, cls);
                break;
            }
        }
        if (options.after_update) options.after_update(u);
    }
    return m;
}

}  // namespace

StepMetrics tri_gan_step(const LabeledBatch& real, Player& generator, Player& discriminator, Player& classifier,
                         const LossWeights& weights, const StepOptions& options, Rng& latent_rng) {
    return adversarial_step(real, generator, discriminator, classifier, weights, options, latent_rng, true);
}

StepMetrics ecgan_step(const LabeledBatch& real, Player& generator, Player& discriminator, Player& classifier,
                       const LossWeights& weights, const StepOptions& options, Rng& latent_rng) {
    return adversarial_step(real, generator, discriminator, classifier, weights, options, latent_rng, false);
}

StepMetrics vanilla_step(const LabeledBatch& real, Player& classifier) {
    check_batch(real);
    Graph g;
    classifier.net.zero_grad();
    const Tensor logits = classifier.net.forward(g, real.images, ForwardMode::train);
    const Tensor loss = supervised_loss(g, logits, real.labels);
    StepMetrics m;
    m.losses.l_s = loss.item();
    m.losses.l_c_total = m.losses.l_s;
    m.train_accuracy = batch_accuracy(logits, real.labels, logits.dim(1));
    backward_and_step("classifier", g, loss, classifier);
    return m;
}

StepMetrics multitask_step(const LabeledBatch& real, Player& generator, Player& shared, Rng& latent_rng) {
    check_batch(real);
    const std::size_t batch = real.size();
    const std::size_t outputs = shared.net.spec().num_classes;
    const std::size_t fake_class = outputs - 1;
    for (int label : real.labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= fake_class) {
            throw std::invalid_argument("multitask label " + std::to_string(label) + " collides with the fake class");
        }
    }

    Graph gen_graph;
    generator.net.zero_grad();
    const Tensor z = sample_latent(batch, generator.net.spec().latent_dim, latent_rng);
    const Tensor fake = generator.net.forward(gen_graph, z, ForwardMode::train);

    StepMetrics m;
    {
        Graph g;
        shared.net.zero_grad();
        const Tensor logits_real = shared.net.forward(g, real.images, ForwardMode::train);
        const Tensor logits_fake = shared.net.forward(g, fake.detached(), ForwardMode::train_frozen_stats);
        const std::vector<int> fake_labels(batch, static_cast<int>(fake_class));
        const Tensor real_term = supervised_loss(g, logits_real, real.labels);
        const Tensor fake_term = supervised_loss(g, logits_fake, fake_labels);
        const Tensor loss = ops::add(g, real_term, fake_term);

        const Tensor p_real = ops::softmax(g, logits_real);
        const Tensor p_fake = ops::softmax(g, logits_fake);
        double real_fakeness = 0.0, not_fake_log = 0.0, fake_realness = 0.0;
        for (std::size_t r = 0; r < batch; ++r) {
            const double q = p_real.at(r * outputs + fake_class);
            real_fakeness += q;
            not_fake_log -= std::log(std::max(1.0 - q, ops::kLogFloor));
            fake_realness += 1.0 - p_fake.at(r * outputs + fake_class);
        }
        const auto n = static_cast<double>(batch);
        m.losses.l_s = real_term.item();
        m.losses.l_c_total = loss.item();
        m.losses.l_d_real = not_fake_log / n;
        m.losses.l_d_fake = fake_term.item();
        m.d_real_mean = 1.0 - real_fakeness / n;
        m.d_fake_mean = fake_realness / n;
        m.train_accuracy = batch_accuracy(logits_real, real.labels, fake_class);
        backward_and_step("discriminator", g, loss, shared);
    }
    {
        FreezeGuard freeze{&shared.net};
        const Tensor logits = shared.net.forward(gen_graph, fake, ForwardMode::train_frozen_stats);
        const std::vector<std::size_t> column(batch, fake_class);
        const Tensor p_fake = ops::gather(gen_graph, ops::softmax(gen_graph, logits), column);
        const Tensor realness = ops::affine(gen_graph, p_fake, -1.0, 1.0);
        const Tensor loss = ops::scale(gen_graph, ops::mean(gen_graph, ops::log(gen_graph, realness)), -1.0);
        m.losses.l_gen_adv = loss.item();
        m.losses.l_g_total = loss.item();
        backward_and_step("generator", gen_graph, loss, generator);
    }
    return m;
}

double evaluate(Network& classifier, const Dataset& ds, std::size_t class_count, std::size_t batch_size) {
    if (ds.size() == 0) throw std::invalid_argument("cannot evaluate on an empty dataset");
    if (batch_size == 0) throw std::invalid_argument("evaluation batch size must be positive");
    if (class_count == 0) class_count = ds.num_classes();
    if (class_count > classifier.spec().num_classes) {
        throw std::invalid_argument("classifier has " + std::to_string(classifier.spec().num_classes) +
                                    " outputs, " + std::to_string(class_count) + " classes requested");
    }
    std::size_t hits = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
        const std::size_t end = std::min(ds.size(), start + batch_size);
        idx.resize(end - start);
        for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
        const LabeledBatch batch = make_batch(ds, idx);
        Graph g;
        const Tensor logits = classifier.forward(g, batch.images.detached(), ForwardMode::eval);
        for (std::size_t r = 0; r < batch.size(); ++r) {
            if (argmax_row(logits.values(), r, logits.dim(1), class_count) ==
                static_cast<std::size_t>(batch.labels[r])) {
                ++hits;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

}  // namespace trigan

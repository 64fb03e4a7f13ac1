//! The tree autoencoder. The encoder message-passes over the junction tree
//! and sums node states into mean/log-variance heads. The decoder expands a
//! tree depth-first: a topology head decides expand-or-stop, a label head
//! picks the child cluster (masked to labels with at least one valid
//! attachment), and a compatibility head ranks attachment sites. Assembly
//! validates every step, so decoded molecules are valence-valid by
//! construction.

use super::assemble::{enumerate_attachments, AttachmentCandidate};
use super::vocab::Vocabulary;
use super::{JtvaeError, JunctionTree};
use crate::chem::MolGraph;
use crate::tensor::ops::{
    self as ops, add, add_scalar, concat_cols, exp, gather, ln, mul, mul_scalar, neg,
    scatter_add, sigmoid, softmax_rows, sub, sum,
};
use crate::tensor::{check_unique_names, Activation, Mlp, Parameter, Rng, Tape, Tensor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaeConfig {
    pub hidden: usize,
    pub latent: usize,
    /// Tree message-passing depth.
    pub depth: usize,
    /// Decoder expansion budget in tree nodes.
    pub node_budget: usize,
    pub vocab_size: usize,
}

impl VaeConfig {
    pub fn paper(vocab_size: usize) -> VaeConfig {
        VaeConfig { hidden: 450, latent: 56, depth: 3, node_budget: 50, vocab_size }
    }

    pub fn desk(vocab_size: usize) -> VaeConfig {
        VaeConfig { hidden: 64, latent: 16, depth: 3, node_budget: 50, vocab_size }
    }
}

pub struct TreeVae {
    pub config: VaeConfig,
    node_embed: Parameter,
    enc_layers: Vec<Mlp>,
    mu_head: Mlp,
    logvar_head: Mlp,
    init_state: Mlp,
    root_label: Mlp,
    topo_head: Mlp,
    label_head: Mlp,
    cell: Mlp,
    compat: Mlp,
}

/// A decoded molecule with the tree that produced it.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub mol: MolGraph,
    pub labels: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// The node budget cut expansion short; the molecule is the best valid
    /// partial result.
    pub budget_exceeded: bool,
}

pub enum DecodeMode<'a> {
    Greedy,
    Sample(&'a mut Rng),
}

impl TreeVae {
    pub fn new(config: VaeConfig, rng: &mut Rng) -> TreeVae {
        let (h, z, v) = (config.hidden, config.latent, config.vocab_size);
        let node_embed = Parameter::new(
            "vae.node_embed",
            vec![v, h],
            (0..v * h).map(|_| rng.normal() * 0.1).collect(),
        );
        let enc_layers = (0..config.depth)
            .map(|l| Mlp::new(&format!("vae.enc{l}"), &[2 * h, h, h], Activation::Sigmoid, rng))
            .collect();
        let vae = TreeVae {
            node_embed,
            enc_layers,
            mu_head: Mlp::new("vae.mu", &[h, z], Activation::Sigmoid, rng),
            logvar_head: Mlp::new("vae.logvar", &[h, z], Activation::Sigmoid, rng),
            init_state: Mlp::new("vae.init", &[z, h], Activation::Sigmoid, rng),
            root_label: Mlp::new("vae.root_label", &[z, h, v], Activation::Sigmoid, rng),
            topo_head: Mlp::new("vae.topo", &[z + h + 1, h / 2, 1], Activation::Sigmoid, rng),
            label_head: Mlp::new("vae.label", &[z + h + 1, h, v], Activation::Sigmoid, rng),
            cell: Mlp::new("vae.cell", &[2 * h, h], Activation::Sigmoid, rng),
            compat: Mlp::new("vae.compat", &[2 * h + 4, h / 2, 1], Activation::Sigmoid, rng),
            config,
        };
        check_unique_names(&vae.params());
        vae
    }

    pub fn params(&self) -> Vec<Parameter> {
        let mut out = vec![self.node_embed.clone()];
        for l in &self.enc_layers {
            out.extend(l.params());
        }
        for mlp in [
            &self.mu_head,
            &self.logvar_head,
            &self.init_state,
            &self.root_label,
            &self.topo_head,
            &self.label_head,
            &self.cell,
            &self.compat,
        ] {
            out.extend(mlp.params());
        }
        out
    }

    /// Tracked encoder pass: `(mu, logvar)`, each `[1, latent]`.
    pub fn forward_encode(&self, tape: &Tape, tree: &JunctionTree) -> (Tensor, Tensor) {
        let labels = tree.labels();
        let n = labels.len();
        let mut h = gather(&tape.leaf(&self.node_embed), &labels);
        let (mut src, mut dst) = (Vec::new(), Vec::new());
        for &(a, b) in &tree.edges {
            src.push(a);
            dst.push(b);
            src.push(b);
            dst.push(a);
        }
        for layer in &self.enc_layers {
            let incoming = if src.is_empty() {
                Tensor::zeros(vec![n, self.config.hidden])
            } else {
                scatter_add(&gather(&h, &src), &dst, n)
            };
            let update = layer.forward(tape, &concat_cols(&[&h, &incoming]));
            h = add(&h, &update);
        }
        let pooled = scatter_add(&h, &vec![0; n], 1);
        let mu = self.mu_head.forward(tape, &pooled);
        let logvar = self.logvar_head.forward(tape, &pooled);
        (mu, logvar)
    }

    /// Untracked encode; returns `(mu, logvar)` as vectors.
    pub fn encode(&self, tree: &JunctionTree) -> (Vec<f64>, Vec<f64>) {
        let tape = Tape::new();
        let (mu, logvar) = self.forward_encode(&tape, tree);
        (mu.data().to_vec(), logvar.data().to_vec())
    }

    /// Reparameterized sample `mu + exp(logvar/2) * eps` with the drawn
    /// noise returned.
    pub fn sample_latent(&self, tree: &JunctionTree, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
        let (mu, logvar) = self.encode(tree);
        let eps: Vec<f64> = (0..mu.len()).map(|_| rng.normal()).collect();
        let z = mu
            .iter()
            .zip(&logvar)
            .zip(&eps)
            .map(|((m, lv), e)| m + (lv / 2.0).exp() * e)
            .collect();
        (z, eps)
    }

    /// Teacher-forced reconstruction loss for one tree given a latent draw:
    /// topology BCE plus label CE, plus attachment-site CE against the true
    /// assembly whenever several sites are possible.
    pub fn decoder_loss(
        &self,
        tape: &Tape,
        tree: &JunctionTree,
        mol: &crate::chem::MolGraph,
        z: &Tensor,
    ) -> Tensor {
        let labels = tree.labels();
        let root = tree.root();
        let mut loss = cross_entropy(&self.root_label.forward(tape, z), labels[root], self.config.vocab_size);
        let h_root = sigmoid(&self.init_state.forward(tape, z));
        // teacher-forced partial assembly: the union of source atoms visited
        let mut assembly = TeacherAssembly {
            mol,
            union: tree.clusters[root].atoms.clone(),
        };
        self.walk_loss(tape, tree, z, root, None, &h_root, &labels, &mut assembly, &mut loss);
        loss
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_loss(
        &self,
        tape: &Tape,
        tree: &JunctionTree,
        z: &Tensor,
        node: usize,
        parent: Option<usize>,
        h_node: &Tensor,
        labels: &[usize],
        assembly: &mut TeacherAssembly,
        loss: &mut Tensor,
    ) {
        let kids = tree.children(node, parent);
        for (k, &child) in kids.iter().enumerate() {
            let ctx = self.context(tape, z, h_node, k);
            let topo_logit = self.topo_head.forward(tape, &ctx);
            *loss = add(loss, &binary_ce(&topo_logit, true));
            let label_logits = self.label_head.forward(tape, &ctx);
            *loss = add(loss, &cross_entropy(&label_logits, labels[child], self.config.vocab_size));

            if let Some(att) = self.attachment_loss(tape, tree, node, child, labels, assembly) {
                *loss = add(loss, &att);
            }
            assembly.absorb(&tree.clusters[child].atoms);

            let embed = gather(&tape.leaf(&self.node_embed), &[labels[child]]);
            let h_child = sigmoid(&self.cell.forward(tape, &concat_cols(&[h_node, &embed])));
            self.walk_loss(tape, tree, z, child, Some(node), &h_child, labels, assembly, loss);
        }
        let ctx = self.context(tape, z, h_node, kids.len());
        let topo_logit = self.topo_head.forward(tape, &ctx);
        *loss = add(loss, &binary_ce(&topo_logit, false));
    }

    /// Cross-entropy of the compatibility head over the enumerated
    /// attachment sites, targeting the site the source molecule used.
    /// Skipped when the site is forced or the truth is not among the
    /// candidates (rare shared-atom layouts).
    fn attachment_loss(
        &self,
        tape: &Tape,
        tree: &JunctionTree,
        node: usize,
        child: usize,
        labels: &[usize],
        assembly: &TeacherAssembly,
    ) -> Option<Tensor> {
        let built = assembly.built();
        let parent_built: Vec<usize> = tree.clusters[node]
            .atoms
            .iter()
            .filter_map(|a| assembly.built_index(*a))
            .collect();
        let child_atoms = &tree.clusters[child].atoms;
        let template = super::vocab::cluster_template(assembly.mol, child_atoms);
        let candidates = super::assemble::enumerate_attachments(&built, &parent_built, &template);
        if candidates.len() < 2 {
            return None;
        }
        // the true unification: child atoms already present in the assembly
        let mut truth: Vec<(usize, usize)> = child_atoms
            .iter()
            .enumerate()
            .filter_map(|(t, a)| assembly.built_index(*a).map(|b| (b, t)))
            .collect();
        truth.sort_unstable();
        let target = candidates.iter().position(|c| {
            let mut u = c.unify.clone();
            u.sort_unstable();
            u == truth
        })?;

        let scores = self.compat_scores(tape, &built, labels[node], labels[child], &candidates);
        // CE over the candidate column: logsumexp(scores) - scores[target]
        let peak = ops::max(&scores);
        let ones = Tensor::from_vec(vec![candidates.len(), 1], vec![1.0; candidates.len()]);
        let shifted = sub(&scores, &crate::tensor::ops::matmul(&ones, &peak));
        let lse = add(&ln(&sum(&exp(&shifted))), &peak);
        let picked = sum(&mul(&shifted, &one_hot_column(target, candidates.len())));
        Some(sub(&sub(&lse, &peak), &picked))
    }

    /// Tracked compatibility scores `[candidates, 1]` for a (parent, child)
    /// label pair over enumerated attachments.
    fn compat_scores(
        &self,
        tape: &Tape,
        built: &MolGraph,
        parent_label: usize,
        child_label: usize,
        candidates: &[AttachmentCandidate],
    ) -> Tensor {
        let n = candidates.len();
        let parent_emb = gather(&tape.leaf(&self.node_embed), &vec![parent_label; n]);
        let child_emb = gather(&tape.leaf(&self.node_embed), &vec![child_label; n]);
        let mut feats = Vec::with_capacity(n * 4);
        for c in candidates {
            let (p0, _) = c.unify[0];
            feats.push(c.unify.len() as f64);
            feats.push(built.atom(p0).element as f64 / 10.0);
            feats.push(built.degree(p0) as f64 / 4.0);
            feats.push(c.result.atom_count() as f64 / 50.0);
        }
        let features = Tensor::from_vec(vec![n, 4], feats);
        self.compat.forward(tape, &concat_cols(&[&parent_emb, &child_emb, &features]))
    }

    fn context(&self, _tape: &Tape, z: &Tensor, h_node: &Tensor, k: usize) -> Tensor {
        let k_scalar = Tensor::from_vec(vec![1, 1], vec![k as f64 / 8.0]);
        concat_cols(&[z, h_node, &k_scalar])
    }

    /// Full negative ELBO for one tree: reconstruction plus beta-weighted KL.
    pub fn elbo_loss(
        &self,
        tape: &Tape,
        tree: &JunctionTree,
        mol: &crate::chem::MolGraph,
        beta: f64,
        rng: &mut Rng,
    ) -> (Tensor, f64, f64) {
        let (mu, logvar) = self.forward_encode(tape, tree);
        let eps_data: Vec<f64> = (0..self.config.latent).map(|_| rng.normal()).collect();
        let eps = Tensor::from_vec(vec![1, self.config.latent], eps_data);
        let z = add(&mu, &mul(&exp(&mul_scalar(&logvar, 0.5)), &eps));
        let recon = self.decoder_loss(tape, tree, mol, &z);
        // KL(q || N(0,I)) = -0.5 * sum(1 + logvar - mu^2 - exp(logvar))
        let kl_terms = sub(
            &add_scalar(&logvar, 1.0),
            &add(&mul(&mu, &mu), &exp(&logvar)),
        );
        let kl = mul_scalar(&sum(&kl_terms), -0.5);
        let recon_value = recon.item();
        let kl_value = kl.item();
        let total = add(&recon, &mul_scalar(&kl, beta));
        (total, recon_value, kl_value)
    }

    /// Expands a latent code into a molecule. Always returns a valence-valid
    /// molecule; the flag reports when the node budget truncated expansion.
    pub fn decode(
        &self,
        z: &[f64],
        vocab: &Vocabulary,
        mode: &mut DecodeMode,
    ) -> Result<DecodeResult, JtvaeError> {
        if z.len() != self.config.latent {
            return Err(JtvaeError::BadLatentDimension {
                got: z.len(),
                want: self.config.latent,
            });
        }
        let zt = Tensor::from_vec(vec![1, z.len()], z.to_vec());

        // root label: no mask, every vocabulary entry stands alone
        let root_logits = self.root_label.infer(&zt);
        let root_id = choose_index(root_logits.data(), &mut *mode, None);
        let mut state = DecodeState {
            mol: vocab.entry(root_id).template.clone(),
            labels: vec![root_id],
            edges: Vec::new(),
            node_atoms: vec![(0..vocab.entry(root_id).template.atom_count()).collect()],
            budget_exceeded: false,
        };
        let h_root = sigmoid_vec(&self.init_state.infer(&zt));
        self.expand_node(&zt, vocab, 0, &h_root, &mut state, mode);
        Ok(DecodeResult {
            mol: state.mol,
            labels: state.labels,
            edges: state.edges,
            budget_exceeded: state.budget_exceeded,
        })
    }

    fn expand_node(
        &self,
        z: &Tensor,
        vocab: &Vocabulary,
        node: usize,
        h_node: &Tensor,
        state: &mut DecodeState,
        mode: &mut DecodeMode,
    ) {
        let mut k = 0usize;
        loop {
            let ctx = concat_cols(&[z, h_node, &Tensor::from_vec(vec![1, 1], vec![k as f64 / 8.0])]);
            let topo_p = logistic(self.topo_head.infer(&ctx).item());
            let expand = match mode {
                DecodeMode::Greedy => topo_p > 0.5,
                DecodeMode::Sample(rng) => rng.uniform() < topo_p,
            };
            if !expand {
                return;
            }
            if state.labels.len() >= self.config.node_budget {
                state.budget_exceeded = true;
                return;
            }

            let label_logits = self.label_head.infer(&ctx).data().to_vec();
            let parent_atoms = state.node_atoms[node].clone();
            let choice = self.choose_attachable_label(
                &label_logits,
                vocab,
                &state.mol,
                &parent_atoms,
                mode,
            );
            let (child_label, candidates) = match choice {
                Some(c) => c,
                None => return, // nothing attaches here; stop expanding
            };
            let candidate = self.pick_attachment(child_label, node, &candidates, state, mode);
            state.mol = candidate.result.clone();
            state.node_atoms.push(candidate.child_atoms.clone());
            // earlier nodes' atom indices are stable: assembly only appends
            state.labels.push(child_label);
            let child_node = state.labels.len() - 1;
            state.edges.push((node, child_node));

            let embed_row = {
                let table = self.node_embed.value();
                let h = self.config.hidden;
                Tensor::from_vec(
                    vec![1, h],
                    table[child_label * h..(child_label + 1) * h].to_vec(),
                )
            };
            let h_child =
                sigmoid_vec(&self.cell.infer(&concat_cols(&[h_node, &embed_row])));
            self.expand_node(z, vocab, child_node, &h_child, state, mode);
            k += 1;
        }
    }

    /// Picks a label among those with at least one valid attachment,
    /// greedily by logit or sampled from the masked softmax.
    fn choose_attachable_label(
        &self,
        logits: &[f64],
        vocab: &Vocabulary,
        mol: &MolGraph,
        parent_atoms: &[usize],
        mode: &mut DecodeMode,
    ) -> Option<(usize, Vec<AttachmentCandidate>)> {
        let mut open: Vec<usize> = (0..vocab.len()).collect();
        loop {
            if open.is_empty() {
                return None;
            }
            let pick = match mode {
                DecodeMode::Greedy => {
                    let best = open
                        .iter()
                        .enumerate()
                        .max_by(|(_, &a), (_, &b)| {
                            logits[a].partial_cmp(&logits[b]).expect("no NaN logits")
                        })
                        .map(|(pos, _)| pos)
                        .expect("open non-empty");
                    best
                }
                DecodeMode::Sample(rng) => {
                    let weights: Vec<f64> = open.iter().map(|&i| logits[i]).collect();
                    softmax_sample(&weights, rng)
                }
            };
            let label = open.swap_remove(pick);
            let candidates = enumerate_attachments(mol, parent_atoms, &vocab.entry(label).template);
            if !candidates.is_empty() {
                return Some((label, candidates));
            }
        }
    }

    fn pick_attachment(
        &self,
        child_label: usize,
        node: usize,
        candidates: &[AttachmentCandidate],
        state: &DecodeState,
        mode: &mut DecodeMode,
    ) -> AttachmentCandidate {
        if candidates.len() == 1 {
            return candidates[0].clone();
        }
        let h = self.config.hidden;
        let parent_label = state.labels[node];
        let table = self.node_embed.value();
        let parent_emb = &table[parent_label * h..(parent_label + 1) * h];
        let child_emb = &table[child_label * h..(child_label + 1) * h];
        let mut rows = Vec::with_capacity(candidates.len() * (2 * h + 4));
        for c in candidates {
            rows.extend_from_slice(parent_emb);
            rows.extend_from_slice(child_emb);
            let (p0, _) = c.unify[0];
            rows.push(c.unify.len() as f64);
            rows.push(state.mol.atom(p0).element as f64 / 10.0);
            rows.push(state.mol.degree(p0) as f64 / 4.0);
            rows.push(c.result.atom_count() as f64 / 50.0);
        }
        drop(table);
        let x = Tensor::from_vec(vec![candidates.len(), 2 * h + 4], rows);
        let scores = self.compat.infer(&x).data().to_vec();
        let idx = match mode {
            DecodeMode::Greedy => {
                let mut best = 0;
                for (i, &s) in scores.iter().enumerate().skip(1) {
                    if s > scores[best] {
                        best = i;
                    }
                }
                best
            }
            DecodeMode::Sample(rng) => softmax_sample(&scores, rng),
        };
        candidates[idx].clone()
    }

    /// Greedy round trip: does decoding the encoded mean reproduce the tree?
    pub fn reconstructs(&self, tree: &JunctionTree, vocab: &Vocabulary) -> bool {
        let (mu, _) = self.encode(tree);
        match self.decode(&mu, vocab, &mut DecodeMode::Greedy) {
            Ok(result) => {
                super::canonical_tree_form(&result.labels, &result.edges)
                    == super::canonical_tree_form(&tree.labels(), &tree.edges)
            }
            Err(_) => false,
        }
    }

    pub fn save(&self, checkpoint: &std::path::Path) -> Result<(), JtvaeError> {
        crate::tensor::save_parameters(checkpoint, &self.params())
            .map_err(|e| JtvaeError::Io(e.to_string()))?;
        let text = serde_json::to_string_pretty(&self.config)
            .map_err(|e| JtvaeError::Io(e.to_string()))?;
        std::fs::write(checkpoint.with_extension("json"), text)
            .map_err(|e| JtvaeError::Io(e.to_string()))
    }

    pub fn load(checkpoint: &std::path::Path) -> Result<TreeVae, JtvaeError> {
        let text = std::fs::read_to_string(checkpoint.with_extension("json"))
            .map_err(|e| JtvaeError::Io(e.to_string()))?;
        let config: VaeConfig =
            serde_json::from_str(&text).map_err(|e| JtvaeError::Io(e.to_string()))?;
        let vae = TreeVae::new(config, &mut Rng::seed_from(0));
        crate::tensor::load_parameters(checkpoint, &vae.params())
            .map_err(|e| JtvaeError::Io(e.to_string()))?;
        Ok(vae)
    }
}

/// Teacher-forced partial assembly: the built molecule is the source
/// subgraph induced by the atoms of every visited cluster.
struct TeacherAssembly<'a> {
    mol: &'a MolGraph,
    /// Sorted source-atom indices absorbed so far.
    union: Vec<usize>,
}

impl TeacherAssembly<'_> {
    fn absorb(&mut self, atoms: &[usize]) {
        for &a in atoms {
            if let Err(pos) = self.union.binary_search(&a) {
                self.union.insert(pos, a);
            }
        }
    }

    fn built(&self) -> MolGraph {
        super::vocab::cluster_template(self.mol, &self.union)
    }

    fn built_index(&self, orig: usize) -> Option<usize> {
        self.union.binary_search(&orig).ok()
    }
}

fn one_hot_column(target: usize, len: usize) -> Tensor {
    let mut data = vec![0.0; len];
    data[target] = 1.0;
    Tensor::from_vec(vec![len, 1], data)
}

struct DecodeState {
    mol: MolGraph,
    labels: Vec<usize>,
    edges: Vec<(usize, usize)>,
    node_atoms: Vec<Vec<usize>>,
    budget_exceeded: bool,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn sigmoid_vec(x: &Tensor) -> Tensor {
    sigmoid(x)
}

fn choose_index(logits: &[f64], mode: &mut DecodeMode, mask: Option<&[bool]>) -> usize {
    let allowed: Vec<usize> = (0..logits.len())
        .filter(|&i| mask.map_or(true, |m| m[i]))
        .collect();
    match mode {
        DecodeMode::Greedy => allowed
            .iter()
            .copied()
            .max_by(|&a, &b| logits[a].partial_cmp(&logits[b]).expect("no NaN"))
            .expect("non-empty"),
        DecodeMode::Sample(rng) => {
            let weights: Vec<f64> = allowed.iter().map(|&i| logits[i]).collect();
            allowed[softmax_sample(&weights, rng)]
        }
    }
}

fn softmax_sample(logits: &[f64], rng: &mut Rng) -> usize {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut draw = rng.uniform() * total;
    for (i, e) in exps.iter().enumerate() {
        draw -= e;
        if draw <= 0.0 {
            return i;
        }
    }
    logits.len() - 1
}

/// `-ln softmax(logits)[target]`, as a tracked scalar.
fn cross_entropy(logits: &Tensor, target: usize, vocab_size: usize) -> Tensor {
    let probs = softmax_rows(logits);
    let mut onehot = vec![0.0; vocab_size];
    onehot[target] = 1.0;
    let mask = Tensor::from_vec(vec![1, vocab_size], onehot);
    neg(&ln(&add_scalar(&sum(&mul(&probs, &mask)), 1e-12)))
}

/// Binary cross-entropy on one logit, as a `[1]` scalar.
fn binary_ce(logit: &Tensor, target: bool) -> Tensor {
    let p = sigmoid(logit);
    let nll = if target {
        neg(&ln(&add_scalar(&p, 1e-12)))
    } else {
        neg(&ln(&add_scalar(&neg(&p), 1.0 + 1e-12)))
    };
    sum(&nll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use crate::jtvae::{build_vocabulary, decompose};

    fn setup() -> (Vec<MolGraph>, Vocabulary, TreeVae) {
        let corpus: Vec<MolGraph> = ["CCO", "CCC", "c1ccccc1", "CCN", "CC(C)O"]
            .iter()
            .map(|s| parse_smiles(s).unwrap())
            .collect();
        let vocab = build_vocabulary(&corpus).unwrap();
        let vae = TreeVae::new(VaeConfig::desk(vocab.len()), &mut Rng::seed_from(11));
        (corpus, vocab, vae)
    }

    #[test]
    fn encode_is_deterministic() {
        let (corpus, vocab, vae) = setup();
        let mut tree = decompose(&corpus[0]).unwrap();
        vocab.assign(&mut tree, &corpus[0]).unwrap();
        let (mu1, lv1) = vae.encode(&tree);
        let (mu2, lv2) = vae.encode(&tree);
        assert_eq!(mu1, mu2);
        assert_eq!(lv1, lv2);
        assert_eq!(mu1.len(), 16);
    }

    #[test]
    fn zero_noise_sample_equals_mean() {
        let (corpus, vocab, vae) = setup();
        let mut tree = decompose(&corpus[0]).unwrap();
        vocab.assign(&mut tree, &corpus[0]).unwrap();
        let (mu, logvar) = vae.encode(&tree);
        let z: Vec<f64> = mu
            .iter()
            .zip(&logvar)
            .map(|(m, lv)| m + (lv / 2.0).exp() * 0.0)
            .collect();
        assert_eq!(z, mu);
    }

    #[test]
    fn encoder_is_cluster_order_invariant() {
        let (corpus, vocab, vae) = setup();
        let mol = &corpus[4]; // CC(C)O: three bond clusters and a junction
        let mut tree = decompose(mol).unwrap();
        vocab.assign(&mut tree, mol).unwrap();
        let (mu_a, _) = vae.encode(&tree);

        // permute cluster order (relabel nodes)
        let n = tree.clusters.len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut relabeled = tree.clone();
        relabeled.clusters = perm.iter().map(|&old| tree.clusters[old].clone()).collect();
        let mut inverse = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        relabeled.edges =
            tree.edges.iter().map(|&(a, b)| (inverse[a].min(inverse[b]), inverse[a].max(inverse[b]))).collect();
        let (mu_b, _) = vae.encode(&relabeled);
        for (a, b) in mu_a.iter().zip(&mu_b) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_latent_dimension_rejected() {
        let (_, vocab, vae) = setup();
        let err = vae.decode(&[0.0; 3], &vocab, &mut DecodeMode::Greedy);
        assert!(matches!(err, Err(JtvaeError::BadLatentDimension { got: 3, want: 16 })));
    }

    #[test]
    fn single_entry_vocabulary_decodes_to_that_entry() {
        let corpus = vec![parse_smiles("c1ccccc1").unwrap()];
        let vocab = build_vocabulary(&corpus).unwrap();
        let vae = TreeVae::new(VaeConfig::desk(vocab.len()), &mut Rng::seed_from(3));
        let mut rng = Rng::seed_from(4);
        for _ in 0..5 {
            let z: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
            let out = vae.decode(&z, &vocab, &mut DecodeMode::Greedy).unwrap();
            assert_eq!(out.labels[0], 0);
            assert!(crate::chem::is_isomorphic(&out.mol, &corpus[0]) || out.labels.len() > 1);
            // every decode is a valid molecule
            assert!(out.mol.is_connected());
        }
    }

    #[test]
    fn prior_samples_decode_to_valid_molecules() {
        let (_, vocab, vae) = setup();
        let mut rng = Rng::seed_from(5);
        for _ in 0..30 {
            let z: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
            let out = vae.decode(&z, &vocab, &mut DecodeMode::Sample(&mut rng)).unwrap();
            assert!(out.mol.atom_count() > 0);
            assert!(out.mol.is_connected());
            // validity is enforced by construction; re-validate explicitly
            let rebuilt =
                MolGraph::new(out.mol.atoms().to_vec(), out.mol.bonds().to_vec());
            assert!(rebuilt.is_ok());
        }
    }

    #[test]
    fn elbo_kl_term_is_nonnegative() {
        let (corpus, vocab, vae) = setup();
        let mut rng = Rng::seed_from(6);
        for mol in &corpus {
            let mut tree = decompose(mol).unwrap();
            vocab.assign(&mut tree, mol).unwrap();
            let tape = Tape::new();
            let (_, recon, kl) = vae.elbo_loss(&tape, &tree, mol, 0.01, &mut rng);
            assert!(kl >= 0.0, "kl {kl}");
            assert!(recon >= 0.0, "recon {recon}");
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let (corpus, vocab, vae) = setup();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vae.mfck");
        vae.save(&path).unwrap();
        let loaded = TreeVae::load(&path).unwrap();
        let mut tree = decompose(&corpus[1]).unwrap();
        vocab.assign(&mut tree, &corpus[1]).unwrap();
        assert_eq!(vae.encode(&tree).0, loaded.encode(&tree).0);
    }
}

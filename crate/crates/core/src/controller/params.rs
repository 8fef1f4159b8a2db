use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ControllerKind, ModelConfig};
use crate::scalar::Scalar;

/// Half-width of the uniform initialisation interval for weight matrices.
pub const INIT_RANGE: f64 = 0.08;
/// Initial bias of every pop projection.
pub const POP_BIAS: f64 = -1.0;
/// Initial bias of the LSTM forget gates.
pub const FORGET_BIAS: f64 = 1.0;

/// A named, trainable tensor stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGroup<T> {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

/// All trainable tensors of a model, in a fixed manifest order. Gradients and
/// optimizer accumulators use the same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<T> {
    pub groups: Vec<ParamGroup<T>>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn zeros_like(other: &ParamSet<T>) -> Self {
        Self {
            groups: other
                .groups
                .iter()
                .map(|g| ParamGroup {
                    name: g.name.clone(),
                    rows: g.rows,
                    cols: g.cols,
                    data: vec![T::zero(); g.data.len()],
                })
                .collect(),
        }
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, id: usize) -> &[T] {
        &self.groups[id].data
    }

    #[inline]
    pub fn get_mut(&mut self, id: usize) -> &mut [T] {
        &mut self.groups[id].data
    }

    pub fn by_name(&self, name: &str) -> Option<&ParamGroup<T>> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.groups.iter().flat_map(|g| g.data.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.groups.iter_mut().flat_map(|g| g.data.iter_mut())
    }

    pub fn same_layout(&self, other: &ParamSet<T>) -> bool {
        self.groups.len() == other.groups.len()
            && self
                .groups
                .iter()
                .zip(&other.groups)
                .all(|(a, b)| a.rows == b.rows && a.cols == b.cols && a.name == b.name)
    }

    /// `self += other`, groupwise.
    pub fn add_assign(&mut self, other: &ParamSet<T>) {
        for (a, b) in self.groups.iter_mut().zip(&other.groups) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += *y;
            }
        }
    }

    pub fn fill_zero(&mut self) {
        for g in &mut self.groups {
            g.data.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    pub fn max_abs(&self) -> T {
        self.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

/// What a parameter group contributes to, for the count breakdown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Embeddings,
    RecurrentCore,
    Projections,
    Output,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct GroupSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub category: Category,
    pub init: Init,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Init {
    Uniform,
    Zero,
    LstmBias { hidden: usize },
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LstmIds {
    pub weights: usize,
    pub bias: usize,
    pub h0: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndIds {
    pub push_w: usize,
    pub push_b: usize,
    pub pop_w: usize,
    pub pop_b: usize,
    pub value_w: usize,
    pub value_b: usize,
}

/// Group indices into the [`ParamSet`] of a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub embedding: usize,
    pub layers: Vec<LstmIds>,
    pub ends: Vec<EndIds>,
    pub out_w: usize,
    pub out_b: usize,
    pub softmax_w: usize,
    pub softmax_b: usize,
}

pub(crate) fn build_layout(config: &ModelConfig) -> (Layout, Vec<GroupSpec>) {
    let mut specs = Vec::new();
    let mut add = |name: String, rows: usize, cols: usize, category: Category, init: Init| {
        specs.push(GroupSpec {
            name,
            rows,
            cols,
            category,
            init,
        });
        specs.len() - 1
    };

    let h = config.hidden;
    let e = config.embedding;
    let embedding = add(
        "embedding.input".into(),
        config.input_rows(),
        e,
        Category::Embeddings,
        Init::Uniform,
    );

    let mut layers = Vec::new();
    for l in 0..config.kind.lstm_layers() {
        let input = config.lstm_input_width(l);
        layers.push(LstmIds {
            weights: add(
                format!("lstm.{l}.weights"),
                4 * h,
                input + h,
                Category::RecurrentCore,
                Init::Uniform,
            ),
            bias: add(
                format!("lstm.{l}.bias"),
                4 * h,
                1,
                Category::RecurrentCore,
                Init::LstmBias { hidden: h },
            ),
            h0: add(
                format!("lstm.{l}.h0"),
                1,
                h,
                Category::RecurrentCore,
                Init::Uniform,
            ),
        });
    }

    let mut ends = Vec::new();
    if let Some(kind) = config.kind.memory() {
        let names = if kind.ends() == 2 { &["top", "bot"][..] } else { &["main"][..] };
        for end in names {
            let m = config.memory_width;
            ends.push(EndIds {
                push_w: add(format!("memory.{end}.push.weights"), 1, h, Category::Projections, Init::Uniform),
                push_b: add(format!("memory.{end}.push.bias"), 1, 1, Category::Projections, Init::Zero),
                pop_w: add(format!("memory.{end}.pop.weights"), 1, h, Category::Projections, Init::Uniform),
                pop_b: add(
                    format!("memory.{end}.pop.bias"),
                    1,
                    1,
                    Category::Projections,
                    Init::Constant(POP_BIAS),
                ),
                value_w: add(format!("memory.{end}.value.weights"), m, h, Category::Projections, Init::Uniform),
                value_b: add(format!("memory.{end}.value.bias"), m, 1, Category::Projections, Init::Zero),
            });
        }
    }

    let p = config.output_width();
    let out_w = add("output.weights".into(), p, h, Category::Output, Init::Uniform);
    let out_b = add("output.bias".into(), p, 1, Category::Output, Init::Zero);
    let c = config.output_classes();
    let softmax_w = add("softmax.weights".into(), c, p, Category::Output, Init::Uniform);
    let softmax_b = add("softmax.bias".into(), c, 1, Category::Output, Init::Zero);

    (
        Layout {
            embedding,
            layers,
            ends,
            out_w,
            out_b,
            softmax_w,
            softmax_b,
        },
        specs,
    )
}

/// Deterministic parameter initialisation.
///
/// Weight matrices, embeddings and `h0` are uniform in `[-0.08, 0.08]`; biases
/// are zero except forget gates (`+1`) and pop projections (`-1`).
pub fn init_parameters<T: Scalar>(config: &ModelConfig, seed: u64) -> ParamSet<T> {
    let (_, specs) = build_layout(config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = specs
        .into_iter()
        .map(|spec| {
            let n = spec.rows * spec.cols;
            let data = match spec.init {
                Init::Uniform => (0..n)
                    .map(|_| T::lit(rng.gen_range(-INIT_RANGE..=INIT_RANGE)))
                    .collect(),
                Init::Zero => vec![T::zero(); n],
                Init::Constant(x) => vec![T::lit(x); n],
                Init::LstmBias { hidden } => (0..n)
                    .map(|i| {
                        // gate order: input, forget, output, candidate
                        if (hidden..2 * hidden).contains(&i) {
                            T::lit(FORGET_BIAS)
                        } else {
                            T::zero()
                        }
                    })
                    .collect(),
            };
            ParamGroup {
                name: spec.name,
                rows: spec.rows,
                cols: spec.cols,
                data,
            }
        })
        .collect();
    ParamSet { groups }
}

/// Trainable scalar counts, split by role.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub total: usize,
    pub embeddings: usize,
    pub recurrent_core: usize,
    pub projections: usize,
    pub output: usize,
}

impl ParamCount {
    /// LSTM layers plus memory projections: everything between the embedding
    /// lookup and the output projection.
    pub fn core(&self) -> usize {
        self.recurrent_core + self.projections
    }
}

pub fn count_parameters(config: &ModelConfig) -> ParamCount {
    let (_, specs) = build_layout(config);
    let mut count = ParamCount::default();
    for s in specs {
        let n = s.rows * s.cols;
        count.total += n;
        match s.category {
            Category::Embeddings => count.embeddings += n,
            Category::RecurrentCore => count.recurrent_core += n,
            Category::Projections => count.projections += n,
            Category::Output => count.output += n,
        }
    }
    count
}

impl ControllerKind {
    pub(crate) fn lstm_layers(self) -> usize {
        match self {
            ControllerKind::Memory(_) => 1,
            ControllerKind::DeepLstm(layers) => layers,
        }
    }
}

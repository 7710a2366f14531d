use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Layer sizes of the network. `Default` is the full-size tagger.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Architecture {
    pub n_mels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub hidden: usize,
    pub gru_layers: usize,
    pub fnn_units: usize,
    pub events: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self { n_mels: 40, filters: 128, kernel: 30, hidden: 128, gru_layers: 3, fnn_units: 500, events: 7 }
    }
}

impl Architecture {
    /// Number of valid kernel positions along the mel axis.
    pub fn conv_positions(&self) -> usize {
        self.n_mels - self.kernel + 1
    }

    pub fn gru_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.filters
        } else {
            2 * self.hidden
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.n_mels, self.filters, self.kernel, self.hidden, self.gru_layers, self.fnn_units, self.events];
        if positive.contains(&0) || self.kernel > self.n_mels {
            return Err(Error::Shape(format!("invalid architecture {self:?}")));
        }
        Ok(())
    }

    /// Name and logical dimensions of every tensor, in canonical order.
    /// Biases are rank 1.
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut specs = vec![
            ("cnn_w".to_string(), vec![self.filters, self.kernel]),
            ("cnn_b".to_string(), vec![self.filters]),
        ];
        for layer in 0..self.gru_layers {
            let input = self.gru_input(layer);
            for dir in ["fwd", "bwd"] {
                let p = format!("gru.{layer}.{dir}");
                for g in ["wz", "wr", "wh"] {
                    specs.push((format!("{p}.{g}"), vec![self.hidden, input]));
                }
                for g in ["uz", "ur", "uh"] {
                    specs.push((format!("{p}.{g}"), vec![self.hidden, self.hidden]));
                }
                for g in ["bz", "br", "bh"] {
                    specs.push((format!("{p}.{g}"), vec![self.hidden]));
                }
            }
        }
        specs.extend([
            ("fnn_w".to_string(), vec![self.fnn_units, 2 * self.hidden]),
            ("fnn_b".to_string(), vec![self.fnn_units]),
            ("out_w".to_string(), vec![self.events, self.fnn_units]),
            ("out_b".to_string(), vec![self.events]),
            ("att_w".to_string(), vec![1, self.n_mels]),
            ("att_b".to_string(), vec![1]),
            ("loc_w".to_string(), vec![self.events, self.n_mels]),
            ("loc_b".to_string(), vec![self.events]),
        ]);
        specs
    }

    pub fn parameter_count(&self) -> usize {
        self.tensor_specs().iter().map(|(_, d)| d.iter().product::<usize>()).sum()
    }
}

/// Weights of one GRU direction. Input weights are `hidden × input`,
/// recurrent weights `hidden × hidden`, biases `1 × hidden`.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub wz: Matrix,
    pub wr: Matrix,
    pub wh: Matrix,
    pub uz: Matrix,
    pub ur: Matrix,
    pub uh: Matrix,
    pub bz: Matrix,
    pub br: Matrix,
    pub bh: Matrix,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            wz: Matrix::zeros(hidden, input),
            wr: Matrix::zeros(hidden, input),
            wh: Matrix::zeros(hidden, input),
            uz: Matrix::zeros(hidden, hidden),
            ur: Matrix::zeros(hidden, hidden),
            uh: Matrix::zeros(hidden, hidden),
            bz: Matrix::zeros(1, hidden),
            br: Matrix::zeros(1, hidden),
            bh: Matrix::zeros(1, hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.uz.rows()
    }

    pub fn input(&self) -> usize {
        self.wz.cols()
    }

    fn tensors(&self) -> [&Matrix; 9] {
        [&self.wz, &self.wr, &self.wh, &self.uz, &self.ur, &self.uh, &self.bz, &self.br, &self.bh]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; 9] {
        [
            &mut self.wz,
            &mut self.wr,
            &mut self.wh,
            &mut self.uz,
            &mut self.ur,
            &mut self.uh,
            &mut self.bz,
            &mut self.br,
            &mut self.bh,
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiGruParams {
    pub fwd: GruParams,
    pub bwd: GruParams,
}

/// Every learnable tensor of the tagger.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    arch: Architecture,
    pub cnn_w: Matrix,
    pub cnn_b: Matrix,
    pub gru: Vec<BiGruParams>,
    pub fnn_w: Matrix,
    pub fnn_b: Matrix,
    pub out_w: Matrix,
    pub out_b: Matrix,
    pub att_w: Matrix,
    pub att_b: Matrix,
    pub loc_w: Matrix,
    pub loc_b: Matrix,
}

impl ModelParams {
    pub fn zeros(arch: Architecture) -> Self {
        let gru = (0..arch.gru_layers)
            .map(|l| BiGruParams {
                fwd: GruParams::zeros(arch.gru_input(l), arch.hidden),
                bwd: GruParams::zeros(arch.gru_input(l), arch.hidden),
            })
            .collect();
        Self {
            arch,
            cnn_w: Matrix::zeros(arch.filters, arch.kernel),
            cnn_b: Matrix::zeros(1, arch.filters),
            gru,
            fnn_w: Matrix::zeros(arch.fnn_units, 2 * arch.hidden),
            fnn_b: Matrix::zeros(1, arch.fnn_units),
            out_w: Matrix::zeros(arch.events, arch.fnn_units),
            out_b: Matrix::zeros(1, arch.events),
            att_w: Matrix::zeros(1, arch.n_mels),
            att_b: Matrix::zeros(1, 1),
            loc_w: Matrix::zeros(arch.events, arch.n_mels),
            loc_b: Matrix::zeros(1, arch.events),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(arch: Architecture, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(arch);
        for (name, m) in p.named_tensors_mut() {
            if is_bias(&name) {
                continue;
            }
            let (fan_out, fan_in) = m.shape();
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            *m = rng.matrix_uniform(fan_out, fan_in, -bound, bound);
        }
        p
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    /// Tensors in canonical order (matching [`Architecture::tensor_specs`]).
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v = vec![&self.cnn_w, &self.cnn_b];
        for layer in &self.gru {
            v.extend(layer.fwd.tensors());
            v.extend(layer.bwd.tensors());
        }
        v.extend([&self.fnn_w, &self.fnn_b, &self.out_w, &self.out_b, &self.att_w, &self.att_b, &self.loc_w, &self.loc_b]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v = vec![&mut self.cnn_w, &mut self.cnn_b];
        for layer in &mut self.gru {
            v.extend(layer.fwd.tensors_mut());
            v.extend(layer.bwd.tensors_mut());
        }
        v.extend([
            &mut self.fnn_w,
            &mut self.fnn_b,
            &mut self.out_w,
            &mut self.out_b,
            &mut self.att_w,
            &mut self.att_b,
            &mut self.loc_w,
            &mut self.loc_b,
        ]);
        v
    }

    pub fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        self.arch.tensor_specs().into_iter().map(|(n, _)| n).zip(self.tensors()).collect()
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let names = self.arch.tensor_specs().into_iter().map(|(n, _)| n);
        names.zip(self.tensors_mut()).collect()
    }

    pub fn tensor(&self, name: &str) -> Option<&Matrix> {
        self.named_tensors().into_iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.named_tensors_mut().into_iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|m| m.data().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.is_finite())
    }

    /// Zero tensors of the same shapes.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.arch)
    }

    /// Rebuilds parameters from named tensors, inferring the architecture.
    pub fn from_named(tensors: Vec<(String, Matrix)>) -> Result<Self> {
        let find = |name: &str| {
            tensors
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, m)| m)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))
        };
        let cnn_w = find("cnn_w")?;
        let gru_layers = (0..).take_while(|l| tensors.iter().any(|(n, _)| n == &format!("gru.{l}.fwd.uz"))).count();
        let arch = Architecture {
            n_mels: find("att_w")?.cols(),
            filters: cnn_w.rows(),
            kernel: cnn_w.cols(),
            hidden: find("gru.0.fwd.uz")?.rows(),
            gru_layers,
            fnn_units: find("fnn_w")?.rows(),
            events: find("out_w")?.rows(),
        };
        arch.validate()?;
        let mut p = Self::zeros(arch);
        if tensors.len() != arch.tensor_specs().len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                arch.tensor_specs().len(),
                tensors.len()
            )));
        }
        for (name, slot) in p.named_tensors_mut() {
            let src = find(&name)?;
            if src.shape() != slot.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    src.shape(),
                    slot.shape()
                )));
            }
            *slot = src.clone();
        }
        Ok(p)
    }
}

pub(crate) fn is_bias(name: &str) -> bool {
    name.ends_with("_b") || name.ends_with(".bz") || name.ends_with(".br") || name.ends_with(".bh")
}

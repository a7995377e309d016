use sha2::{Digest, Sha256};

use crate::cells::{Model, NetworkSpec};
use crate::numerics::{RngState, Tensor2};
use crate::ppo::{Adam, PpoConfig, Trainer, TrainerRngs};

use super::CliError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"THGCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;
const LITTLE_ENDIAN: u8 = 1;

/// Saved actor and critic with their optimizer and random-stream state.
///
/// Layout, all integers and floats little-endian: magic, `u32` version, `u8`
/// endianness tag, actor and critic spec tags, `u64` iteration, tensors
/// (`name`, `u64` rows, `u64` cols, `f64` payload), optimizers (`name`, `u64`
/// step, `f64` β1 β2 ε, `u32` count, first then second moments), random
/// streams (`name`, 32-byte key, `u64` stream, `u128` word position).
/// Strings are a `u32` byte length followed by UTF-8.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub actor_tag: String,
    pub critic_tag: String,
    pub iteration: u64,
    pub tensors: Vec<(String, Tensor2)>,
    pub optimizers: Vec<(String, Adam)>,
    pub rngs: Vec<(String, RngState)>,
}

impl Checkpoint {
    pub fn from_trainer(t: &Trainer) -> Self {
        let mut tensors = Vec::new();
        for (prefix, model) in [("actor", &t.actor), ("critic", &t.critic)] {
            tensors.extend(
                model
                    .named_params()
                    .into_iter()
                    .map(|(n, p)| (format!("{prefix}.{n}"), p.clone())),
            );
        }
        Self {
            actor_tag: t.actor.spec().tag(),
            critic_tag: t.critic.spec().tag(),
            iteration: t.iteration as u64,
            tensors,
            optimizers: vec![
                ("actor".into(), t.actor_opt.clone()),
                ("critic".into(), t.critic_opt.clone()),
            ],
            rngs: vec![
                ("rollout".into(), t.rngs.rollout.state()),
                ("minibatch".into(), t.rngs.minibatch.state()),
                ("dropout".into(), t.rngs.dropout.state()),
            ],
        }
    }

    fn model(&self, prefix: &str, tag: &str) -> Result<Model, CliError> {
        let spec = NetworkSpec::from_tag(tag)?;
        let lead = format!("{prefix}.");
        let named: Vec<(String, Tensor2)> = self
            .tensors
            .iter()
            .filter_map(|(n, t)| n.strip_prefix(&lead).map(|s| (s.to_string(), t.clone())))
            .collect();
        Ok(Model::from_named(spec, &named)?)
    }

    pub fn actor(&self) -> Result<Model, CliError> {
        self.model("actor", &self.actor_tag)
    }

    pub fn critic(&self) -> Result<Model, CliError> {
        self.model("critic", &self.critic_tag)
    }

    /// Rebuilds a trainer positioned where this checkpoint was taken.
    pub fn restore(&self, cfg: PpoConfig) -> Result<Trainer, CliError> {
        let opt = |name: &str| {
            self.optimizers
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, a)| a.clone())
                .ok_or_else(|| CliError::Checkpoint(format!("missing optimizer `{name}`")))
        };
        let rng = |name: &str| {
            self.rngs
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, s)| crate::numerics::Rng::from_state(s))
                .ok_or_else(|| CliError::Checkpoint(format!("missing random stream `{name}`")))
        };
        Ok(Trainer {
            cfg,
            actor: self.actor()?,
            critic: self.critic()?,
            actor_opt: opt("actor")?,
            critic_opt: opt("critic")?,
            rngs: TrainerRngs {
                rollout: rng("rollout")?,
                minibatch: rng("minibatch")?,
                dropout: rng("dropout")?,
            },
            iteration: self.iteration as usize,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.0.push(LITTLE_ENDIAN);
        w.str(&self.actor_tag);
        w.str(&self.critic_tag);
        w.u64(self.iteration);
        w.u32(self.tensors.len() as u32);
        for (n, t) in &self.tensors {
            w.str(n);
            w.tensor(t);
        }
        w.u32(self.optimizers.len() as u32);
        for (n, a) in &self.optimizers {
            w.str(n);
            w.u64(a.t);
            w.f64(a.beta1);
            w.f64(a.beta2);
            w.f64(a.eps);
            w.u32(a.m.len() as u32);
            for t in a.m.iter().chain(&a.v) {
                w.tensor(t);
            }
        }
        w.u32(self.rngs.len() as u32);
        for (n, s) in &self.rngs {
            w.str(n);
            w.0.extend_from_slice(&s.key);
            w.u64(s.stream);
            w.0.extend_from_slice(&s.word_pos.to_le_bytes());
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(CliError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(CliError::Checkpoint(format!("unsupported format version {version}")));
        }
        if r.take(1)?[0] != LITTLE_ENDIAN {
            return Err(CliError::Checkpoint("unsupported byte order".into()));
        }
        let actor_tag = r.str()?;
        let critic_tag = r.str()?;
        let iteration = r.u64()?;
        let n = r.u32()?;
        let mut tensors = Vec::new();
        for _ in 0..n {
            tensors.push((r.str()?, r.tensor()?));
        }
        let n = r.u32()?;
        let mut optimizers = Vec::new();
        for _ in 0..n {
            let name = r.str()?;
            let t = r.u64()?;
            let (beta1, beta2, eps) = (r.f64()?, r.f64()?, r.f64()?);
            let count = r.u32()? as usize;
            let m = (0..count).map(|_| r.tensor()).collect::<Result<_, _>>()?;
            let v = (0..count).map(|_| r.tensor()).collect::<Result<_, _>>()?;
            optimizers.push((
                name,
                Adam {
                    beta1,
                    beta2,
                    eps,
                    t,
                    m,
                    v,
                },
            ));
        }
        let n = r.u32()?;
        let mut rngs = Vec::new();
        for _ in 0..n {
            let name = r.str()?;
            let key: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
            let stream = r.u64()?;
            let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
            rngs.push((name, RngState { key, stream, word_pos }));
        }
        if r.pos != bytes.len() {
            return Err(CliError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self {
            actor_tag,
            critic_tag,
            iteration,
            tensors,
            optimizers,
            rngs,
        })
    }

    /// Plain-text summary written next to the binary file.
    pub fn sidecar(&self, hash: &str) -> String {
        let mut s = format!(
            "format={CHECKPOINT_VERSION}\nsha256={hash}\niteration={}\nactor={}\ncritic={}\n",
            self.iteration, self.actor_tag, self.critic_tag
        );
        for (n, t) in &self.tensors {
            s.push_str(&format!("tensor {n} {}x{}\n", t.rows(), t.cols()));
        }
        for (n, a) in &self.optimizers {
            s.push_str(&format!("optimizer {n} adam step={}\n", a.t));
        }
        for (n, _) in &self.rngs {
            s.push_str(&format!("rng {n} {}\n", crate::numerics::RNG_ALGORITHM));
        }
        s
    }
}

/// Git-style object hash: SHA-256 of `blob <len>\0` followed by the content.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }

    fn tensor(&mut self, t: &Tensor2) {
        self.u64(t.rows() as u64);
        self.u64(t.cols() as u64);
        for &v in t.data() {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| CliError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, CliError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self) -> Result<String, CliError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| CliError::Checkpoint("invalid UTF-8".into()))
    }

    fn tensor(&mut self) -> Result<Tensor2, CliError> {
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        let len = rows
            .checked_mul(cols)
            .filter(|&l| l.saturating_mul(8) <= self.bytes.len() - self.pos)
            .ok_or_else(|| CliError::Checkpoint(format!("tensor {rows}x{cols} exceeds the file")))?;
        let data = (0..len).map(|_| self.f64()).collect::<Result<Vec<_>, _>>()?;
        Ok(Tensor2::from_vec(rows, cols, data).expect("length checked"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{build_architecture, ArchKind, CellChoice, CellFamily};

    fn trainer(family: CellFamily) -> Trainer {
        let a = build_architecture(ArchKind::TmazeSmall, CellChoice::Single(family), 4, 4).unwrap();
        let c = build_architecture(ArchKind::TmazeSmall, CellChoice::Single(family), 4, 1).unwrap();
        Trainer::new(PpoConfig::tmaze(), a, c, 5).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let ck = Checkpoint::from_trainer(&trainer(CellFamily::Bmru));
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(&bytes[..8], CHECKPOINT_MAGIC);
    }

    #[test]
    fn restore_gives_same_models() {
        let t = trainer(CellFamily::Gru);
        let r = Checkpoint::from_trainer(&t).restore(t.cfg.clone()).unwrap();
        assert_eq!(r.actor.named_params(), t.actor.named_params());
        assert_eq!(r.critic.named_params(), t.critic.named_params());
        assert_eq!(r.rngs.rollout.state(), t.rngs.rollout.state());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = Checkpoint::from_trainer(&trainer(CellFamily::MinGru)).to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&magic).is_err());
        let mut version = bytes;
        version[8] = 9;
        assert!(Checkpoint::from_bytes(&version).is_err());
    }

    #[test]
    fn git_style_hash() {
        // `printf '' | git hash-object --object-format=sha256 --stdin`
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}

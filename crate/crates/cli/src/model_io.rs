//! Model file format: a small binary header describing the architecture,
//! followed by every parameter as little-endian f32 in the model's flat
//! parameter order (per conv layer weights then bias, then the two dense
//! layers).

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use auralis_core::nn::{Architecture, CnnModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAGIC: &[u8; 4] = b"ARLS";
const VERSION: u32 = 1;

pub fn save_model(path: &Path, model: &CnnModel) -> Result<()> {
    let arch = &model.arch;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(arch.input_h as u32).to_le_bytes());
    out.extend_from_slice(&(arch.input_w as u32).to_le_bytes());
    out.extend_from_slice(&(arch.conv_channels.len() as u32).to_le_bytes());
    for &c in &arch.conv_channels {
        out.extend_from_slice(&(c as u32).to_le_bytes());
    }
    out.extend_from_slice(&(arch.hidden as u32).to_le_bytes());
    out.extend_from_slice(&(arch.class_names.len() as u32).to_le_bytes());
    for name in &arch.class_names {
        let bytes = name.as_bytes();
        out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(bytes);
    }
    out.extend_from_slice(&arch.dropout_rate.to_le_bytes());
    let params = model.flat_params();
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            bail!("{}: truncated model file", self.path.display());
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn load_model(path: &Path) -> Result<CnnModel> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut r = Reader {
        bytes: &bytes,
        at: 0,
        path,
    };
    if r.take(4)? != MAGIC {
        bail!("{}: not a model file", path.display());
    }
    let version = r.u32()?;
    if version != VERSION {
        bail!("{}: unsupported model format version {version}", path.display());
    }
    let input_h = r.u32()? as usize;
    let input_w = r.u32()? as usize;
    let n_conv = r.u32()? as usize;
    if n_conv == 0 || n_conv > 32 {
        bail!("{}: implausible conv layer count {n_conv}", path.display());
    }
    let mut conv_channels = Vec::with_capacity(n_conv);
    for _ in 0..n_conv {
        conv_channels.push(r.u32()? as usize);
    }
    let hidden = r.u32()? as usize;
    let n_classes = r.u32()? as usize;
    if n_classes == 0 || n_classes > 1024 {
        bail!("{}: implausible class count {n_classes}", path.display());
    }
    let mut class_names = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .with_context(|| format!("{}: class name is not UTF-8", path.display()))?;
        class_names.push(name.to_string());
    }
    let dropout_rate = r.f64()?;
    if !(0.0..1.0).contains(&dropout_rate) {
        bail!("{}: dropout rate {dropout_rate} out of range", path.display());
    }
    let arch = Architecture {
        input_h,
        input_w,
        conv_channels,
        hidden,
        class_names,
        dropout_rate,
    };
    let mut model = CnnModel::new(arch, &mut ChaCha8Rng::seed_from_u64(0))?;
    let count = r.u64()? as usize;
    if count != model.num_params() {
        bail!(
            "{}: parameter count {count} does not match architecture ({})",
            path.display(),
            model.num_params()
        );
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let b = r.take(4)?;
        params.push(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64);
    }
    if r.at != bytes.len() {
        bail!("{}: trailing bytes after parameters", path.display());
    }
    model.set_flat_params(&params)?;
    Ok(model)
}

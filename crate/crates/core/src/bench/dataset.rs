use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::synth::{motion_kernel, piecewise_smooth_image, rng_from_seed, synth_blur};
use crate::error::{Error, Result};
use crate::image::{read_image, read_kernel_table, write_image, write_kernel_table, GrayImage, Kernel};

/// One synthetic blur instance. `blurred` is reproducible from
/// `(sharp, kernel, sigma, seed)` through [`synth_blur`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub id: usize,
    pub sharp: GrayImage,
    pub kernel: Kernel,
    pub sigma: f64,
    pub seed: u64,
    pub blurred: GrayImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub seed: u64,
    pub n_images: usize,
    pub n_kernels: usize,
    pub image_size: usize,
    /// Kernel `j` uses `kernel_sizes[j % len]`.
    pub kernel_sizes: Vec<usize>,
    pub sigma: f64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_images == 0 || self.n_kernels == 0 || self.kernel_sizes.is_empty() {
            return Err(Error::param("dataset needs at least one image and one kernel"));
        }
        for &ks in &self.kernel_sizes {
            if ks % 2 == 0 || ks < 3 || ks >= self.image_size {
                return Err(Error::param(format!(
                    "kernel size {ks} invalid for {}px images",
                    self.image_size
                )));
            }
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::param("sigma must be >= 0"));
        }
        Ok(())
    }
}

/// Images and kernels are drawn from seeds derived from `spec.seed`; case
/// `i * n_kernels + j` pairs image `i` with kernel `j`.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<BenchCase>> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let image_seeds: Vec<u64> = (0..spec.n_images).map(|_| rng.random()).collect();
    let kernel_seeds: Vec<u64> = (0..spec.n_kernels).map(|_| rng.random()).collect();
    let images: Vec<GrayImage> = image_seeds
        .iter()
        .map(|&s| piecewise_smooth_image(spec.image_size, s))
        .collect();
    let kernels = kernel_seeds
        .iter()
        .enumerate()
        .map(|(j, &s)| motion_kernel(spec.kernel_sizes[j % spec.kernel_sizes.len()], s))
        .collect::<Result<Vec<_>>>()?;
    let mut cases = Vec::with_capacity(images.len() * kernels.len());
    for (i, sharp) in images.iter().enumerate() {
        for (j, kernel) in kernels.iter().enumerate() {
            let seed: u64 = rng.random();
            cases.push(BenchCase {
                id: i * spec.n_kernels + j,
                sharp: sharp.clone(),
                kernel: kernel.clone(),
                sigma: spec.sigma,
                seed,
                blurred: synth_blur(sharp, kernel, spec.sigma, seed)?,
            });
        }
    }
    Ok(cases)
}

fn case_dir(root: &Path, id: usize) -> PathBuf {
    root.join(format!("case_{id:03}"))
}

/// One sub-directory per case: `sharp.pgm`, `blurred.pgm`, `kernel.pgm`
/// (rescaled for display), `kernel.txt` (exact values) and `meta.txt`.
pub fn write_dataset(root: impl AsRef<Path>, cases: &[BenchCase]) -> Result<()> {
    let root = root.as_ref();
    for case in cases {
        let dir = case_dir(root, case.id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_image(dir.join("sharp.pgm"), &case.sharp)?;
        write_image(dir.join("blurred.pgm"), &case.blurred)?;
        write_image(dir.join("kernel.pgm"), &case.kernel.to_display_image())?;
        write_kernel_table(dir.join("kernel.txt"), &case.kernel)?;
        let meta = format!(
            "id={}\nsigma={}\nseed={}\nkernel_size={}\n",
            case.id,
            case.sigma,
            case.seed,
            case.kernel.width()
        );
        let path = dir.join("meta.txt");
        fs::write(&path, meta).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn meta_value<'a>(text: &'a str, key: &str, path: &Path) -> Result<&'a str> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim())
        .ok_or_else(|| Error::param(format!("{}: missing `{key}`", path.display())))
}

/// Reads every `case_*` sub-directory, sorted by id.
pub fn read_dataset(root: impl AsRef<Path>) -> Result<Vec<BenchCase>> {
    let root = root.as_ref();
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.file_name().to_string_lossy().starts_with("case_") {
            dirs.push(entry.path());
        }
    }
    let mut cases = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let path = dir.join("meta.txt");
        let meta = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let bad = |k: &str| Error::param(format!("{}: bad `{k}`", path.display()));
        cases.push(BenchCase {
            id: meta_value(&meta, "id", &path)?.parse().map_err(|_| bad("id"))?,
            sigma: meta_value(&meta, "sigma", &path)?.parse().map_err(|_| bad("sigma"))?,
            seed: meta_value(&meta, "seed", &path)?.parse().map_err(|_| bad("seed"))?,
            sharp: read_image(dir.join("sharp.pgm"))?,
            blurred: read_image(dir.join("blurred.pgm"))?,
            kernel: read_kernel_table(dir.join("kernel.txt"))?,
        });
    }
    cases.sort_by_key(|c| c.id);
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> DatasetSpec {
        DatasetSpec {
            seed: 9,
            n_images: 2,
            n_kernels: 2,
            image_size: 32,
            kernel_sizes: vec![5, 7],
            sigma: 0.01,
        }
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = generate_dataset(&spec()).unwrap();
        let b = generate_dataset(&spec()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        for c in &a {
            assert!(c.kernel.is_projected(1e-12));
            let again = synth_blur(&c.sharp, &c.kernel, c.sigma, c.seed).unwrap();
            assert_eq!(again, c.blurred);
        }
        assert_eq!(a[1].kernel.width(), 7);
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cases = generate_dataset(&spec()).unwrap();
        write_dataset(dir.path(), &cases).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), cases.len());
        for (a, b) in back.iter().zip(&cases) {
            assert_eq!(a.kernel, b.kernel);
            assert_eq!((a.id, a.seed, a.sigma), (b.id, b.seed, b.sigma));
            // images pass through 8-bit quantization
            assert!(a.sharp.mse(&b.sharp).unwrap() < 1e-5);
        }
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut s = spec();
        s.kernel_sizes = vec![4];
        assert!(generate_dataset(&s).is_err());
    }
}

use crate::error::{Error, Result};
use crate::image::GrayImage;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub path: PathBuf,
    pub label: usize,
}

/// Labeled images laid out as `root/<category>/*.{pgm,png}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub classes: Vec<String>,
    pub samples: Vec<Sample>,
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "png")
    )
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

impl Dataset {
    /// Indexes `root`. With an empty `categories` every subdirectory is a
    /// class, in sorted order; otherwise the listed ones, in that order.
    pub fn open(root: &Path, categories: &[String]) -> Result<Dataset> {
        let classes: Vec<String> = if categories.is_empty() {
            sorted_entries(root)?
                .into_iter()
                .filter(|p| p.is_dir())
                .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(str::to_owned))
                .collect()
        } else {
            categories.to_vec()
        };
        if classes.is_empty() {
            return Err(Error::invalid(format!("no categories under {}", root.display())));
        }
        let mut samples = Vec::new();
        for (label, name) in classes.iter().enumerate() {
            let dir = root.join(name);
            let files: Vec<_> = sorted_entries(&dir)?.into_iter().filter(|p| is_image(p)).collect();
            if files.is_empty() {
                return Err(Error::invalid(format!("category {name} has no images")));
            }
            samples.extend(files.into_iter().map(|path| Sample { path, label }));
        }
        Ok(Dataset { classes, samples })
    }

    pub fn count(&self, label: usize) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// Random disjoint train/test draw of fixed size per class.
    pub fn split(&self, train_per_class: usize, test_per_class: usize, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
        if train_per_class == 0 || test_per_class == 0 {
            return Err(Error::invalid("train and test counts must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (label, name) in self.classes.iter().enumerate() {
            let mut members: Vec<&Sample> = self.samples.iter().filter(|s| s.label == label).collect();
            if members.len() < train_per_class + test_per_class {
                return Err(Error::invalid(format!(
                    "category {name} has {} images, needs {}",
                    members.len(),
                    train_per_class + test_per_class
                )));
            }
            members.shuffle(&mut rng);
            train.extend(members[..train_per_class].iter().map(|&s| s.clone()));
            test.extend(members[train_per_class..train_per_class + test_per_class].iter().map(|&s| s.clone()));
        }
        Ok((train, test))
    }
}

pub(crate) fn load_images(samples: &[Sample]) -> Result<Vec<GrayImage>> {
    use rayon::prelude::*;
    samples.par_iter().map(|s| GrayImage::load(&s.path)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (cat, n) in [("b", 4), ("a", 3)] {
            std::fs::create_dir(dir.path().join(cat)).unwrap();
            for i in 0..n {
                GrayImage::zeros(4, 4).save(dir.path().join(cat).join(format!("{i}.pgm"))).unwrap();
            }
        }
        std::fs::write(dir.path().join("a").join("notes.txt"), "x").unwrap();
        dir
    }

    #[test]
    fn open_sorts_and_filters() {
        let dir = corpus();
        let ds = Dataset::open(dir.path(), &[]).unwrap();
        assert_eq!(ds.classes, vec!["a", "b"]);
        assert_eq!((ds.count(0), ds.count(1)), (3, 4));
        let picked = Dataset::open(dir.path(), &["b".into()]).unwrap();
        assert_eq!(picked.samples.len(), 4);
        assert!(Dataset::open(dir.path(), &["zz".into()]).is_err());
    }

    #[test]
    fn split_is_disjoint_and_seeded() {
        let dir = corpus();
        let ds = Dataset::open(dir.path(), &[]).unwrap();
        let (tr, te) = ds.split(2, 1, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (4, 2));
        assert!(tr.iter().all(|s| !te.contains(s)));
        assert_eq!(ds.split(2, 1, 7).unwrap(), (tr, te));
        assert!(ds.split(3, 1, 7).is_err());
    }
}

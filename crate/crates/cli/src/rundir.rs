//! Output directories with a hash manifest.

use scenforge_core::world::fnv1a64;
use scenforge_core::Result;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.txt";

pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        std::fs::write(self.path(name), bytes)?;
        Ok(())
    }

    /// Lists every other file in the directory with its content hash, by name.
    pub fn seal(&self) -> Result<()> {
        let text = manifest_text(&self.root)?;
        self.write(MANIFEST, text)
    }
}

pub fn manifest_text(root: &Path) -> Result<String> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(root)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && name != MANIFEST {
            names.push(name);
        }
    }
    names.sort();
    let mut out = String::new();
    for name in names {
        let hash = fnv1a64(&std::fs::read(root.join(&name))?);
        out.push_str(&format!("{hash:016x}  {name}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_is_sorted_and_skips_itself() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::create(dir.path()).unwrap();
        run.write("b.txt", "two").unwrap();
        run.write("a.txt", "one").unwrap();
        run.seal().unwrap();
        let text = std::fs::read_to_string(run.path(MANIFEST)).unwrap();
        let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().nth(1).unwrap()).collect();
        assert_eq!(names, ["a.txt", "b.txt"]);
        run.seal().unwrap();
        assert_eq!(std::fs::read_to_string(run.path(MANIFEST)).unwrap(), text);
    }
}

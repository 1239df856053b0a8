//! In-process case and plan store, optionally mirrored to a directory as
//! `cases/<id>.json` and `plans/<id>.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use bandeau_core::format::{load_case, load_plan, save_case, save_plan};
use bandeau_core::{Case, PlanFile};

#[derive(Default)]
pub struct Store {
    cases: RwLock<BTreeMap<String, Arc<Case>>>,
    plans: RwLock<BTreeMap<String, Arc<PlanFile>>>,
    data_dir: Option<PathBuf>,
    // one writer at a time, so a file and its map entry never disagree
    writes: Mutex<()>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens a persistent store, loading whatever the directory holds.
    pub fn open(dir: &Path) -> anyhow::Result<Self> {
        let store = Self {
            data_dir: Some(dir.to_path_buf()),
            ..Self::default()
        };
        for sub in ["cases", "plans"] {
            fs::create_dir_all(dir.join(sub))?;
        }
        for entry in fs::read_dir(dir.join("cases"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let case = load_case(&path)?;
                store
                    .cases
                    .write()
                    .unwrap()
                    .insert(case.id(), Arc::new(case));
            }
        }
        for entry in fs::read_dir(dir.join("plans"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let plan = load_plan(&path)?;
                store
                    .plans
                    .write()
                    .unwrap()
                    .insert(plan.id.clone(), Arc::new(plan));
            }
        }
        Ok(store)
    }

    pub fn insert_case(&self, case: Case) -> anyhow::Result<(String, Arc<Case>)> {
        let id = case.id();
        let _guard = self.writes.lock().unwrap();
        if let Some(existing) = self.cases.read().unwrap().get(&id) {
            return Ok((id, existing.clone()));
        }
        if let Some(dir) = &self.data_dir {
            save_case(&case, &dir.join("cases").join(format!("{id}.json")))?;
        }
        let case = Arc::new(case);
        self.cases.write().unwrap().insert(id.clone(), case.clone());
        Ok((id, case))
    }

    pub fn insert_plan(&self, plan: PlanFile) -> anyhow::Result<Arc<PlanFile>> {
        let _guard = self.writes.lock().unwrap();
        if let Some(existing) = self.plans.read().unwrap().get(&plan.id) {
            return Ok(existing.clone());
        }
        if let Some(dir) = &self.data_dir {
            save_plan(&plan, &dir.join("plans").join(format!("{}.json", plan.id)))?;
        }
        let plan = Arc::new(plan);
        self.plans
            .write()
            .unwrap()
            .insert(plan.id.clone(), plan.clone());
        Ok(plan)
    }

    pub fn case(&self, id: &str) -> Option<Arc<Case>> {
        self.cases.read().unwrap().get(id).cloned()
    }

    pub fn plan(&self, id: &str) -> Option<Arc<PlanFile>> {
        self.plans.read().unwrap().get(id).cloned()
    }

    pub fn cases(&self) -> Vec<(String, Arc<Case>)> {
        self.cases
            .read()
            .unwrap()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bandeau_core::{synth_case, Bucket};

    #[test]
    fn persisted_store_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let case = Case::from_synth(&synth_case(Bucket::Sagittal, 4).unwrap());
        let id = {
            let store = Store::open(dir.path()).unwrap();
            store.insert_case(case.clone()).unwrap().0
        };
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.case(&id).as_deref(), Some(&case));
        assert_eq!(store.cases().len(), 1);
        // no temporary files left behind
        let names: Vec<_> = fs::read_dir(dir.path().join("cases")).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}

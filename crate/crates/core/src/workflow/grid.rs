use crate::preprocess::MsLevel;
use crate::scoring::PipelineSetup;

use super::config::{ConfigError, WorkflowConfig};

fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Cartesian product of the configured options in `(pp, ms, function,
/// clustering)` order. Functions without multiscale support only run at 0MS.
pub fn enumerate_setups(config: &WorkflowConfig) -> Result<Vec<PipelineSetup>, ConfigError> {
    let ms_levels = sorted(&config.ms_levels()?);
    let functions = sorted(&config.functions);
    let clusterings = sorted(&config.clusterings);
    let mut out = Vec::new();
    for pp in sorted(&config.pp) {
        for &ms in &ms_levels {
            for &function in &functions {
                if ms != MsLevel::Ms0 && !function.is_multiscale() {
                    continue;
                }
                for &clustering in &clusterings {
                    out.push(PipelineSetup {
                        pp,
                        ms,
                        function,
                        clustering,
                    });
                }
            }
        }
    }
    if out.is_empty() {
        return Err(ConfigError::EmptyGrid);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusteringMethod;
    use crate::similarity::SimilarityFunctionId;

    fn config() -> WorkflowConfig {
        WorkflowConfig::new("in.sorc", "out")
    }

    #[test]
    fn default_grid() {
        let setups = enumerate_setups(&config()).unwrap();
        assert_eq!(setups.len(), 138);
        for m in ClusteringMethod::ALL {
            assert_eq!(setups.iter().filter(|s| s.clustering == m).count(), 46);
        }
        assert!(setups.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn capability_restriction() {
        let mut c = config();
        c.functions = vec![SimilarityFunctionId::Cosine];
        assert_eq!(enumerate_setups(&c).unwrap().len(), 18);
        c.functions = vec![SimilarityFunctionId::SharedPixel];
        assert_eq!(enumerate_setups(&c).unwrap().len(), 6);
        c.ms = vec![1, 2];
        assert!(matches!(enumerate_setups(&c), Err(ConfigError::EmptyGrid)));
    }
}

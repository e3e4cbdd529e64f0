use super::params::{digits, index};

/// One ordered split (A₁,…,A_r) of the positions [m] with |A_i| = parts[i].
/// `map[J]` is the index of J_{A₁}J_{A₂}…J_{A_r}.
#[derive(Debug, Clone)]
pub struct ShuffleTerm {
    pub weight: f64,
    pub inversions: usize,
    pub map: Vec<u32>,
}

/// All splits of level Σparts, weighted by q^{inversions of A₁A₂…A_r}.
#[derive(Debug, Clone)]
pub struct ShuffleTable {
    pub parts: Vec<usize>,
    pub level: usize,
    pub terms: Vec<ShuffleTerm>,
}

impl ShuffleTable {
    pub fn new(q: f64, n: usize, parts: &[usize]) -> Self {
        let level: usize = parts.iter().sum();
        let dim = n.pow(level as u32);
        let mut orders = Vec::new();
        split(&(0..level).collect::<Vec<_>>(), parts, &mut Vec::new(), &mut orders);
        let all: Vec<Vec<usize>> = (0..dim).map(|j| digits(j, n, level)).collect();
        let mut buf = vec![0usize; level];
        let terms = orders
            .into_iter()
            .map(|order| {
                let inversions = crate::partitions::inversions_perm(&order);
                let map = all
                    .iter()
                    .map(|d| {
                        for (i, &p) in order.iter().enumerate() {
                            buf[i] = d[p];
                        }
                        index(&buf, n) as u32
                    })
                    .collect();
                ShuffleTerm { weight: q.powi(inversions as i32), inversions, map }
            })
            .collect();
        Self { parts: parts.to_vec(), level, terms }
    }
}

fn split(rest: &[usize], parts: &[usize], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let Some((&first, tail)) = parts.split_first() else {
        out.push(prefix.clone());
        return;
    };
    if tail.is_empty() {
        prefix.extend_from_slice(rest);
        out.push(prefix.clone());
        prefix.truncate(prefix.len() - rest.len());
        return;
    }
    for chosen in itertools::Itertools::combinations(0..rest.len(), first) {
        let base = prefix.len();
        prefix.extend(chosen.iter().map(|&i| rest[i]));
        let left: Vec<usize> =
            (0..rest.len()).filter(|i| !chosen.contains(i)).map(|i| rest[i]).collect();
        split(&left, tail, prefix, out);
        prefix.truncate(base);
    }
}

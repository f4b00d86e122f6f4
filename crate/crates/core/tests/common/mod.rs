#![allow(dead_code)]

use std::collections::BTreeSet;

use compgen::dataset::{Example, Split};
use compgen::rng;
use compgen::task::*;
use rand::Rng;

/// Small random coverage instance: 3 inputs, random tables, a training set
/// of at most 40 inputs and a disjoint test set.
pub struct Instance {
    pub vocab: u32,
    pub structure: CompositionStructure,
    pub primitives: Vec<PrimitiveTable>,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

fn labeled(s: &CompositionStructure, p: &[PrimitiveTable], x: Vec<TokenId>, split: Split) -> Example {
    let e = evaluate(s, p, &x).unwrap();
    Example { input: x, target: e.output, intermediates: e.intermediates, split }
}

pub fn random_instance(seed: u64) -> Instance {
    let mut r = rng::stream(seed, 0xC0);
    let vocab = r.random_range(4..=6u32);
    let kind = if r.random_bool(0.75) { TaskKind::TWO_HOP } else { TaskKind::NonTree };
    let structure = kind.structure();
    let primitives = random_primitives_for(&structure, vocab, 1.0, seed).unwrap();
    let domain = vocab.pow(3);
    let draw = |r: &mut rng::Rng| {
        let c = r.random_range(0..domain);
        tokens(&[c / (vocab * vocab), c / vocab % vocab, c % vocab])
    };
    let n_train = r.random_range(4..=40usize);
    let mut train_inputs = BTreeSet::new();
    while train_inputs.len() < n_train {
        train_inputs.insert(draw(&mut r));
    }
    let mut test_inputs = BTreeSet::new();
    while test_inputs.len() < 20 {
        let x = draw(&mut r);
        if !train_inputs.contains(&x) {
            test_inputs.insert(x);
        }
    }
    let train = train_inputs.into_iter().map(|x| labeled(&structure, &primitives, x, Split::Train)).collect();
    let test = test_inputs.into_iter().map(|x| labeled(&structure, &primitives, x, Split::OodTest)).collect();
    Instance { vocab, structure, primitives, train, test }
}

/// Mean same-group cosine minus mean cross-group cosine by a double loop.
pub fn iicg_double_loop(rows: &[Vec<f64>], groups: &[usize]) -> f64 {
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        d / (na * nb)
    };
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let c = cos(&rows[i], &rows[j]);
            if groups[i] == groups[j] {
                intra += c;
                n_intra += 1;
            } else {
                inter += c;
                n_inter += 1;
            }
        }
    }
    intra / n_intra as f64 - inter / n_inter as f64
}

pub fn gaussian_rows(r: &mut rng::Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    (0..count).map(|_| (0..dim).map(|_| StandardNormal.sample(r)).collect()).collect()
}

/// Random orthogonal matrix (rows) by Gram-Schmidt on Gaussian rows.
pub fn random_orthogonal(r: &mut rng::Rng, dim: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for mut v in gaussian_rows(r, dim, dim) {
        for u in &q {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
        q.push(v);
    }
    q
}

pub fn rotate(q: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    q.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Rank of the target by fully sorting the row, best among ties.
pub fn sorted_rank(scores: &[f64], target: usize) -> usize {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then((a != target).cmp(&(b != target))));
    order.iter().position(|&i| i == target).unwrap() + 1
}

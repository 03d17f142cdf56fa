"""Programs shared by the soundness, normalization and type-preservation tests.

Each entry is ``(name, source, params)``; ``params`` binds free
parameters to values (their types are inferred from the values).
"""

DISCRETE = [
    ("flip", "flip 0.7", {}),
    ("if_int", "if flip 0.7 then 1 else 2", {}),
    ("fail_branch", "let x = flip 0.5 in if x then fail else 0", {}),
    ("fail_only", "fail:bool", {}),
    ("not_flip", "not (flip 0.2)", {}),
    ("and_or", "let a = flip 0.3 in let b = flip 0.6 in (a && b) || not b", {}),
    ("pair_vars", "let a = flip 0.3 in let b = flip 0.9 in (a, b)", {}),
    ("pair_proj", "let a = flip 0.3 in let b = flip 0.9 in fst((a, b))", {}),
    ("dependent_bias",
     "let a = flip 0.3 in let b = flip (if a then 0.9 else 0.2) in b", {}),
    ("sum_ints",
     "let a = flip 0.3 in let b = flip 0.6 in (if a then 1 else 0) + (if b then 1 else 0)", {}),
    ("match_binders",
     "let s = (if flip 0.4 then inl:int(3) else inr:int(5)) in\n"
     "match s with inl x -> x + 1 | inr y -> y * 2", {}),
    ("chain_depth6",
     "let b1 = flip 0.6 in\n"
     "let b2 = flip (if b1 then 0.7 else 0.2) in\n"
     "let b3 = flip (if b2 then 0.9 else 0.4) in\n"
     "let b4 = flip (if b3 then 0.3 else 0.8) in\n"
     "let b5 = flip (if b4 then 0.55 else 0.15) in\n"
     "let b6 = flip (if b5 then 0.25 else 0.65) in\n"
     "b6", {}),
    ("chain_depth6_count",
     "let b1 = flip 0.5 in\n"
     "let b2 = flip (if b1 then 0.6 else 0.3) in\n"
     "let b3 = flip (if b2 then 0.2 else 0.7) in\n"
     "let b4 = flip 0.4 in\n"
     "let b5 = flip (if b4 then 0.9 else 0.1) in\n"
     "let b6 = flip 0.5 in\n"
     "(if b1 then 1 else 0) + (if b3 then 1 else 0) + (if b5 then 1 else 0)"
     " + (if b6 then 1 else 0)", {}),
    ("nested_lets",
     "let a = flip 0.2 in let c = a in let d = not c in let e = flip 0.5 in d && e", {}),
    ("nested_match",
     "let a = flip 0.3 in let b = flip 0.5 in\n"
     "if a then (if b then 1 else 2) else (if b then 3 else fail)", {}),
    ("fail_in_branch_pair",
     "let a = flip 0.3 in let b = flip 0.8 in if a && b then fail else (a, b)", {}),
    ("param_bias", "let a = flip p in if a then 10 else 20", {"p": 0.35}),
    ("invalid_bias", "flip 1.5", {}),
    ("invalid_inner", "let a = flip 0.5 in flip (if a then 0.5 else 2.0)", {}),
    ("xor", "let a = flip 0.3 in let b = flip 0.6 in (a && not b) || (b && not a)", {}),
    ("compare", "let a = flip 0.3 in let b = flip 0.6 in"
                " (if a then 2 else 0) < (if b then 1 else 3)", {}),
    ("unit_result", "let a = flip 0.3 in if a then () else fail", {}),
    ("sum_type", "let a = flip 0.3 in if a then inl:bool(2) else inr:int(flip 0.5)", {}),
    ("int_param_shift", "(if flip 0.25 then 1 else 0) + k", {"k": 4}),
]

# (name, source, params); all have type real
CONTINUOUS = [
    ("mixture", "if flip 0.7 then random(Gaussian(0.0, 1.0)) else random(Gaussian(4.0, 1.0))",
     {}),
    ("scale", "2.5 * random(Gaussian(1.0, 0.5))", {}),
    ("scale_neg_div", "random(Beta(2.0, 3.0)) / -0.5", {}),
    ("plus_det", "random(Gaussian(0.0, 1.0)) + r", {"r": 1.5}),
    ("minus_det", "3.0 - random(Gamma(2.0, 1.0))", {}),
    ("plus_rnd", "random(Uniform(0.0, 1.0)) + random(Uniform(0.0, 2.0))", {}),
    ("plus_rnd_gauss", "let x = random(Gaussian(0.0, 1.0)) in let y = random(Gaussian(1.0, 2.0))"
                       " in x + y", {}),
    ("exp", "exp(random(Gaussian(0.0, 0.5)))", {}),
    ("inverse", "1.0 / random(Uniform(1.0, 3.0))", {}),
    ("inverse_const", "2.0 / random(Gamma(3.0, 1.0))", {}),
    ("log", "log(random(Gamma(2.0, 1.5)))", {}),
    ("random_rnd", "let m = random(Gaussian(0.0, 1.0)) in random(Gaussian(m, 1.0))", {}),
    ("random_rnd_scale", "let s = random(Uniform(0.5, 1.5)) in random(Gaussian(0.0, s))", {}),
    ("beta_bernoulli",
     "let p = random(Beta(1.0, 1.0)) in let b = random(Bernoulli(p)) in"
     " if b then p + 1.0 else p", {}),
    ("fail_branch", "let b = flip 0.2 in if b then fail else random(Gaussian(0.0, 1.0))", {}),
    ("fig1",
     "let branch = random(Bernoulli(0.7)) in\n"
     "let temp = random(Gaussian(0.0, 1.0)) in\n"
     "match branch with\n"
     "  inl _ -> random(Gaussian(mA, 1.0))\n"
     "| inr _ ->\n"
     "    let result = temp + mB in\n"
     "    result", {"mA": 0.0, "mB": 4.0}),
    ("invalid_param_mass", "let s = random(Uniform(-1.0, 1.0)) in random(Gaussian(0.0, s))", {}),
    ("negate", "-random(Gamma(2.0, 1.0))", {}),
]

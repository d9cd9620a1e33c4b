pub mod random_lp;

use crate::cfg::{build_cfg, control_dependencies, BlockId, Cfg, ControlDependency};
use crate::minilang::{self, Function, LangError, Program};

/// A parsed program together with its per-function static analyses.
/// `cfgs[i]` and `cds[i]` belong to `program.functions[i]`.
#[derive(Debug, Clone)]
pub struct Subject {
    pub program: Program,
    pub cfgs: Vec<Cfg>,
    pub cds: Vec<ControlDependency>,
}

impl Subject {
    pub fn new(program: Program) -> Subject {
        let cfgs: Vec<Cfg> = program.functions.iter().map(build_cfg).collect();
        let cds = cfgs.iter().map(control_dependencies).collect();
        Subject { program, cfgs, cds }
    }

    pub fn parse(source_name: &str, source: &str) -> Result<Subject, LangError> {
        Ok(Subject::new(minilang::parse(source_name, source)?))
    }

    pub fn index_of(&self, function: &str) -> Option<usize> {
        self.program.function_index(function)
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.program.function(name)
    }

    pub fn cfg(&self, function: &str) -> Option<&Cfg> {
        self.index_of(function).map(|i| &self.cfgs[i])
    }

    pub fn cd(&self, function: &str) -> Option<&ControlDependency> {
        self.index_of(function).map(|i| &self.cds[i])
    }

    /// The block holding `line` in `function`.
    pub fn block_of(&self, function: &str, line: u32) -> Option<BlockId> {
        self.cfg(function)?.block_of_line(line)
    }
}

// implemented below in this module
namespace gsot { namespace { using placeholder = int; } }
